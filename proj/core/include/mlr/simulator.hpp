#pragma once

#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "mlr/image.hpp"
#include "mlr/types.hpp"

namespace mlr::sim {

struct Segment {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool operator==(const Segment&) const = default;
};

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(double x, double y) const noexcept {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  bool operator==(const Bounds&) const = default;
};

struct WorldModel {
  std::vector<Segment> walls;
  Pose2D start;
  Bounds bounds;
};

/// Robot and sensor geometry. All lengths in meters.
struct SimConfig {
  double robot_radius = 0.2;
  double ir_max_range = 3.0;
  double fov = std::numbers::pi / 2.0;
  double ir_render_range = 5.0;
  int image_width = 64;
  int image_height = 48;
  Limits limits;
};

struct RobotState {
  Pose2D pose;
  double fork = 0.0;
  bool collided = false;  // last step was blocked

  bool operator==(const RobotState&) const = default;
};

struct SensorFrame {
  RgbImage image;
  IrDistances distances{};
  Pose2D pose;

  bool operator==(const SensorFrame&) const = default;
};

inline constexpr std::uint8_t kSkyShade = 180;
inline constexpr std::uint8_t kFloorShade = 60;

/// Distance from (x, y) along `angle` to the nearest wall, or `max_range`.
double raycast(const WorldModel& world, double x, double y, double angle, double max_range);

/// Smallest distance from (x, y) to any wall.
double wall_clearance(const WorldModel& world, double x, double y);

/// One explicit Euler step of unicycle kinematics. A pose whose disc would
/// touch a wall is rejected: position stays, heading and fork still update,
/// and `collided` is set.
RobotState step(const WorldModel& world, const RobotState& state, const CommandTriple& command, double dt,
                const SimConfig& config = {});

/// IR ring and a column-raycast camera image at the current pose.
SensorFrame sense(const WorldModel& world, const RobotState& state, const SimConfig& config = {});

/// Scripted right-wall follower used as the demonstrating teacher.
struct TeacherGains {
  double clearance = 0.6;
  double cruise_speed = 0.6;
  double slow_speed = 0.2;
  double slow_distance = 1.0;
  double side_gain = 1.2;
  double diagonal_gain = 0.8;
};

CommandTriple teacher_policy(const SensorFrame& frame, const Limits& limits = {}, const TeacherGains& gains = {});

/// Line format: `wall x1 y1 x2 y2`, `start x y yaw`, `#` comments.
WorldModel parse_world(std::string_view text, const SimConfig& config = {});
WorldModel load_world(const std::filesystem::path& path, const SimConfig& config = {});
std::string format_world(const WorldModel& world);

/// The shipped 10 x 8 m arena with two interior walls.
std::string_view default_world_text() noexcept;
WorldModel default_world(const SimConfig& config = {});

}  // namespace mlr::sim
