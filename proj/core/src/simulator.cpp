#include "mlr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "mlr/error.hpp"
#include "text_format.hpp"

namespace mlr::sim {

namespace {

constexpr std::string_view kDefaultWorld = R"(# 10 x 8 m arena. Corners are chamfered so the wall follower
# can turn them; two free-standing interior walls give the camera landmarks.
wall 2 0 8 0
wall 8 0 10 2
wall 10 2 10 6
wall 10 6 8 8
wall 8 8 2 8
wall 2 8 0 6
wall 0 6 0 2
wall 0 2 2 0
wall 3 2.5 3 5.5
wall 7 2.5 7 5.5
start 0.6 4.5 -1.5707963267948966
)";

double point_segment_distance(const Segment& s, double px, double py) {
  const double dx = s.x2 - s.x1;
  const double dy = s.y2 - s.y1;
  const double len2 = dx * dx + dy * dy;
  double u = 0.0;
  if (len2 > 0.0) u = std::clamp(((px - s.x1) * dx + (py - s.y1) * dy) / len2, 0.0, 1.0);
  return std::hypot(px - (s.x1 + u * dx), py - (s.y1 + u * dy));
}

std::uint8_t wall_shade(double range, double render_range) {
  const double fade = std::clamp(1.0 - range / render_range, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * fade * 0.8 + 25.0));
}

void validate_world(const WorldModel& world, const SimConfig& config) {
  if (world.walls.size() < 3) throw Error(Errc::InvalidWorld, "need at least 3 walls for a closed arena");
  if (!world.bounds.contains(world.start.x, world.start.y)) {
    throw Error(Errc::InvalidWorld, "start pose lies outside the arena");
  }
  if (wall_clearance(world, world.start.x, world.start.y) < config.robot_radius) {
    throw Error(Errc::InvalidWorld, "start pose is closer than the robot radius to a wall");
  }
}

}  // namespace

double raycast(const WorldModel& world, double x, double y, double angle, double max_range) {
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  double best = max_range;
  for (const Segment& s : world.walls) {
    const double ex = s.x2 - s.x1;
    const double ey = s.y2 - s.y1;
    const double denom = dx * ey - dy * ex;
    if (denom == 0.0) continue;  // parallel
    const double wx = s.x1 - x;
    const double wy = s.y1 - y;
    const double t = (wx * ey - wy * ex) / denom;
    const double u = (wx * dy - wy * dx) / denom;
    if (t >= 0.0 && u >= 0.0 && u <= 1.0 && t < best) best = t;
  }
  return best;
}

double wall_clearance(const WorldModel& world, double x, double y) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : world.walls) best = std::min(best, point_segment_distance(s, x, y));
  return best;
}

RobotState step(const WorldModel& world, const RobotState& state, const CommandTriple& command, double dt,
                const SimConfig& config) {
  const CommandTriple c = clamp_command(command, config.limits);
  RobotState next = state;
  const double yaw = state.pose.yaw;
  next.pose.yaw = normalize_angle(yaw + c.angular * dt);
  next.fork = c.fork;

  const double x = state.pose.x + c.linear * std::cos(yaw) * dt;
  const double y = state.pose.y + c.linear * std::sin(yaw) * dt;
  if (wall_clearance(world, x, y) < config.robot_radius || !world.bounds.contains(x, y)) {
    next.collided = true;
  } else {
    next.pose.x = x;
    next.pose.y = y;
    next.collided = false;
  }
  return next;
}

SensorFrame sense(const WorldModel& world, const RobotState& state, const SimConfig& config) {
  SensorFrame frame;
  frame.pose = state.pose;
  const double x = state.pose.x;
  const double y = state.pose.y;
  for (std::size_t k = 0; k < kIrCount; ++k) {
    const double heading = state.pose.yaw + static_cast<double>(k) * std::numbers::pi / 4.0;
    frame.distances[k] = raycast(world, x, y, heading, config.ir_max_range);
  }

  const int width = config.image_width;
  const int height = config.image_height;
  frame.image = RgbImage(width, height);
  const double infinity = std::numeric_limits<double>::infinity();
  for (int col = 0; col < width; ++col) {
    // Column 0 looks furthest left.
    const double offset = config.fov / 2.0 - (col + 0.5) * config.fov / width;
    const double range = raycast(world, x, y, state.pose.yaw + offset, infinity);
    int band = 0;
    std::uint8_t shade = 0;
    if (std::isfinite(range)) {
      band = static_cast<int>(std::lround(height * std::min(1.0, 0.5 / range)));
      shade = wall_shade(range, config.ir_render_range);
    }
    const int top = (height - band) / 2;
    for (int row = 0; row < height; ++row) {
      std::uint8_t value = kFloorShade;
      if (row < top) {
        value = kSkyShade;
      } else if (row < top + band) {
        value = shade;
      }
      frame.image.set_gray(col, row, value);
    }
  }
  return frame;
}

CommandTriple teacher_policy(const SensorFrame& frame, const Limits& limits, const TeacherGains& gains) {
  const double front = frame.distances[0];
  const double right = frame.distances[6];
  const double front_right = frame.distances[7];
  const double steer = gains.side_gain * (right - gains.clearance) +
                       gains.diagonal_gain * (front_right - gains.clearance * std::numbers::sqrt2);
  CommandTriple command;
  command.linear = front < gains.slow_distance ? gains.slow_speed : gains.cruise_speed;
  // Counter-clockwise yaw: steering right (negative) closes a too-wide gap.
  command.angular = -std::clamp(steer, -limits.w_max, limits.w_max);
  command.fork = 0.0;
  return command;
}

WorldModel parse_world(std::string_view text, const SimConfig& config) {
  using detail::parse_real;
  WorldModel world;
  bool have_start = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword)) continue;
    std::vector<std::string> args;
    for (std::string a; fields >> a;) args.push_back(a);
    const auto where = "line " + std::to_string(line_no);
    if (keyword == "wall") {
      if (args.size() != 4) throw Error(Errc::ParseError, where + ": wall needs 4 numbers");
      world.walls.push_back({parse_real(args[0], where), parse_real(args[1], where), parse_real(args[2], where),
                             parse_real(args[3], where)});
    } else if (keyword == "start") {
      if (args.size() != 3) throw Error(Errc::ParseError, where + ": start needs 3 numbers");
      if (have_start) throw Error(Errc::ParseError, where + ": duplicate start");
      world.start = {parse_real(args[0], where), parse_real(args[1], where), parse_real(args[2], where)};
      have_start = true;
    } else {
      throw Error(Errc::ParseError, where + ": unknown keyword '" + keyword + "'");
    }
  }
  if (!have_start) throw Error(Errc::ParseError, "world has no start line");
  if (world.walls.empty()) throw Error(Errc::InvalidWorld, "world has no walls");

  Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Segment& s : world.walls) {
    b.min_x = std::min({b.min_x, s.x1, s.x2});
    b.min_y = std::min({b.min_y, s.y1, s.y2});
    b.max_x = std::max({b.max_x, s.x1, s.x2});
    b.max_y = std::max({b.max_y, s.y1, s.y2});
  }
  world.bounds = b;
  world.start.yaw = normalize_angle(world.start.yaw);
  validate_world(world, config);
  return world;
}

WorldModel load_world(const std::filesystem::path& path, const SimConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open world file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_world(text, config);
}

std::string format_world(const WorldModel& world) {
  using detail::format_real;
  std::string out;
  for (const Segment& s : world.walls) {
    out += "wall " + format_real(s.x1) + " " + format_real(s.y1) + " " + format_real(s.x2) + " " +
           format_real(s.y2) + "\n";
  }
  out += "start " + format_real(world.start.x) + " " + format_real(world.start.y) + " " +
         format_real(world.start.yaw) + "\n";
  return out;
}

std::string_view default_world_text() noexcept { return kDefaultWorld; }

WorldModel default_world(const SimConfig& config) { return parse_world(kDefaultWorld, config); }

}  // namespace mlr::sim
