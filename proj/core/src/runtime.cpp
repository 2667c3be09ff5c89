#include "mlr/runtime.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "mlr/error.hpp"

namespace mlr {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Mode mode) noexcept {
  return mode == Mode::Autonomous ? "autonomous" : "manual";
}

Mode parse_mode(std::string_view name) {
  if (name == "manual") return Mode::Manual;
  if (name == "autonomous") return Mode::Autonomous;
  throw Error(Errc::ConfigError, "unknown mode '" + std::string(name) + "'");
}

void RuntimeConfig::validate() const {
  if (!(dt > 0.0)) throw Error(Errc::ConfigError, "dt must be positive");
  if (!(record_rate_hz > 0.0)) throw Error(Errc::ConfigError, "record rate must be positive");
  if (record_rate_hz > 1.0 / dt * (1.0 + 1e-12)) {
    throw Error(Errc::ConfigError, "record rate exceeds the tick rate");
  }
  if (image_width <= 0 || image_height <= 0 || image_width * image_height < 4) {
    throw Error(Errc::ConfigError, "image must hold at least 4 pixels");
  }
}

std::size_t RuntimeConfig::record_cadence() const {
  validate();
  return static_cast<std::size_t>(std::max(1L, std::lround(1.0 / (record_rate_hz * dt))));
}

sim::SimConfig RuntimeConfig::sim_config() const {
  sim::SimConfig sim;
  sim.image_width = image_width;
  sim.image_height = image_height;
  return sim;
}

RuntimeConfig parse_runtime_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::ParseError, "config: top level must be an object");

  RuntimeConfig c;
  try {
    if (j.contains("world_path")) c.world_path = j.at("world_path").get<std::string>();
    if (j.contains("session_root")) c.session_root = j.at("session_root").get<std::string>();
    if (j.contains("model_path")) c.model_path = j.at("model_path").get<std::string>();
    if (j.contains("session_path")) c.session_path = j.at("session_path").get<std::string>();
    if (j.contains("width")) c.image_width = j.at("width").get<int>();
    if (j.contains("height")) c.image_height = j.at("height").get<int>();
    if (j.contains("dt")) c.dt = j.at("dt").get<double>();
    if (j.contains("record_rate_hz")) c.record_rate_hz = j.at("record_rate_hz").get<double>();
    if (j.contains("rule")) c.rule = parse_rule(j.at("rule").get<std::string>());
    if (j.contains("port")) c.port = j.at("port").get<std::uint16_t>();
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RuntimeConfig load_runtime_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_runtime_config(text);
}

ControlLoop::ControlLoop(sim::WorldModel world, RuntimeConfig config)
    : world_(std::move(world)), config_(std::move(config)), sim_(config_.sim_config()) {
  config_.validate();
  state_.pose = world_.start;
  mode_ = config_.mode;
}

void ControlLoop::attach_model(std::shared_ptr<const EigenModel> model,
                               std::shared_ptr<const ProjectedDataset> dataset) {
  if (!model || !dataset) throw Error(Errc::NotReady, "model and dataset are both required");
  if (model->width != config_.image_width || model->height != config_.image_height) {
    throw Error(Errc::ShapeError, "model geometry does not match the camera");
  }
  model_ = std::move(model);
  dataset_ = std::move(dataset);
}

void ControlLoop::set_mode(Mode mode) {
  if (mode == Mode::Autonomous && !has_model()) {
    throw Error(Errc::NotReady, "autonomous mode needs a loaded model");
  }
  mode_ = mode;
}

void ControlLoop::start_recording(SessionWriter writer) {
  if (writer.manifest().image_width != config_.image_width ||
      writer.manifest().image_height != config_.image_height) {
    throw Error(Errc::ShapeError, "session geometry does not match the camera");
  }
  recorder_.emplace(std::move(writer));
  recording_since_ = tick_;
}

std::optional<SessionWriter> ControlLoop::stop_recording() {
  std::optional<SessionWriter> out;
  out.swap(recorder_);
  return out;
}

TickReport ControlLoop::run_tick() {
  if (mode_ == Mode::Autonomous && !has_model()) {
    throw Error(Errc::NotReady, "autonomous mode needs a loaded model");
  }

  TickReport report;
  report.tick = tick_;
  report.mode = mode_;
  report.frame = sim::sense(world_, state_, sim_);

  CommandTriple command;
  if (mode_ == Mode::Autonomous) {
    report.recognition = recognize(*model_, *dataset_,
                                   scale_image(report.frame.image, model_->width, model_->height), config_.rule);
    command = report.recognition->command;
  } else if (pilot_ == Pilot::Teacher) {
    command = sim::teacher_policy(report.frame, sim_.limits);
  } else {
    command = teleop_;
  }
  report.applied = clamp_command(command, sim_.limits);

  state_ = sim::step(world_, state_, report.applied, config_.dt, sim_);
  report.collided = state_.collided;

  report.recording = recorder_.has_value();
  if (recorder_ && (tick_ - recording_since_) % config_.record_cadence() == 0) {
    report.session_index =
        recorder_->append(report.frame.image, report.frame.distances, report.frame.pose, report.applied);
  }
  ++tick_;
  return report;
}

std::string record_demo(const sim::WorldModel& world, const RuntimeConfig& config, std::size_t steps, Pilot pilot,
                        std::optional<std::string> label, const LoopHooks& hooks) {
  const std::size_t cadence = config.record_cadence();
  if (steps < cadence) {
    throw Error(Errc::InsufficientData, std::to_string(steps) + " steps record nothing at a cadence of " +
                                            std::to_string(cadence) + " ticks");
  }
  const std::string session_label = label ? *label : make_label(std::chrono::system_clock::now());

  ControlLoop loop(world, config);
  loop.set_mode(Mode::Manual);
  loop.set_pilot(pilot);
  loop.start_recording(SessionWriter::open(config.session_root, session_label, config.image_width,
                                           config.image_height, config.record_rate_hz));
  const fs::path directory = loop.recorder()->directory();

  for (std::size_t i = 0; i < steps; ++i) {
    if (hooks.before_tick) hooks.before_tick(loop);
    const TickReport report = loop.run_tick();
    if (hooks.after_tick) hooks.after_tick(report);
    if (report.collided && pilot == Pilot::Teacher) {
      loop.stop_recording();
      std::error_code ec;
      fs::remove_all(directory, ec);
      throw Error(Errc::CollisionDuringDemo, "teacher collided at tick " + std::to_string(report.tick));
    }
  }
  loop.stop_recording();
  return session_label;
}

DriveSummary drive(const sim::WorldModel& world, const RuntimeConfig& config,
                   std::shared_ptr<const EigenModel> model, std::shared_ptr<const ProjectedDataset> dataset,
                   std::size_t steps, const LoopHooks& hooks) {
  ControlLoop loop(world, config);
  loop.attach_model(std::move(model), std::move(dataset));
  loop.set_mode(Mode::Autonomous);

  DriveSummary summary;
  summary.matched_indices.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    if (hooks.before_tick) hooks.before_tick(loop);
    const TickReport report = loop.run_tick();
    if (hooks.after_tick) hooks.after_tick(report);
    ++summary.ticks;
    if (report.collided) ++summary.collisions;
    if (report.recognition) summary.matched_indices.push_back(report.recognition->best_index);
  }
  summary.final_pose = loop.state().pose;
  return summary;
}

EvalReport evaluate(const EigenModel& model, const ProjectedDataset& dataset, const LoadedSession& session) {
  const DataMatrix data = session_data_matrix(session);
  if (data.rows() != model.dimension()) throw Error(Errc::ShapeError, "session does not match model geometry");
  const std::size_t t = static_cast<std::size_t>(data.cols());

  EvalReport report;
  report.samples = t;

  // Queries are the session's own images; a recognized sample counts as
  // agreeing when its command matches or it is indistinguishable from the
  // query in the eigenspace (duplicate-image tie).
  std::vector<Eigen::VectorXd> queries(t);
  for (std::size_t k = 0; k < t; ++k) queries[k] = project(model, data.col(static_cast<Eigen::Index>(k)));

  using clock = std::chrono::steady_clock;
  double ranksum_seconds = 0.0;
  for (Rule rule : kAllRules) {
    std::size_t agree = 0;
    for (std::size_t k = 0; k < t; ++k) {
      const auto started = clock::now();
      const RecognitionResult result =
          recognize(model, dataset, data.col(static_cast<Eigen::Index>(k)), rule);
      if (rule == Rule::RankSum) ranksum_seconds += std::chrono::duration<double>(clock::now() - started).count();
      const bool same_command = result.command == session.record(k).command;
      const bool tied = dataset.omegas[result.best_index] == queries[k];
      if (same_command || tied) ++agree;
    }
    report.agreement_by_rule[std::string(to_string(rule))] = static_cast<double>(agree) / static_cast<double>(t);
  }
  report.mean_latency_ms = 1000.0 * ranksum_seconds / static_cast<double>(t);

  for (Eigen::Index n = 1; n <= model.n_kept(); ++n) {
    const double sse = reconstruction_sse(truncate(model, static_cast<std::size_t>(n)), data);
    report.reconstruction_error_by_n.emplace_back(static_cast<std::size_t>(n), sse / static_cast<double>(t));
  }
  return report;
}

std::string EvalReport::to_json() const {
  json j;
  j["agreement_by_rule"] = agreement_by_rule;
  json errors = json::object();
  for (const auto& [n, error] : reconstruction_error_by_n) errors[std::to_string(n)] = error;
  j["reconstruction_error_by_n"] = errors;
  j["mean_latency_ms"] = mean_latency_ms;
  j["samples"] = samples;
  return j.dump(2);
}

}  // namespace mlr
