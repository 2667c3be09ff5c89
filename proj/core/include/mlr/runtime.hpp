#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlr/learning.hpp"
#include "mlr/memory.hpp"
#include "mlr/recognition.hpp"
#include "mlr/simulator.hpp"

namespace mlr {

enum class Mode { Manual, Autonomous };

/// Source of commands while in manual mode.
enum class Pilot { Teleop, Teacher };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view name);

struct RuntimeConfig {
  std::filesystem::path world_path;
  std::filesystem::path session_root = "sessions";
  std::filesystem::path model_path;
  std::filesystem::path session_path;  // training session backing the model
  int image_width = 64;
  int image_height = 48;
  double dt = 0.1;
  double record_rate_hz = 1.0;
  Rule rule = Rule::RankSum;
  std::uint16_t port = 8080;
  Mode mode = Mode::Manual;

  /// ConfigError unless rate <= 1/dt, width*height >= 4 and dt > 0.
  void validate() const;
  /// Ticks between two recorded samples.
  std::size_t record_cadence() const;
  sim::SimConfig sim_config() const;
};

/// JSON object whose keys mirror RuntimeConfig; missing keys keep defaults.
RuntimeConfig parse_runtime_config(std::string_view json_text);
RuntimeConfig load_runtime_config(const std::filesystem::path& path);

struct TickReport {
  std::uint64_t tick = 0;
  sim::SensorFrame frame;
  CommandTriple applied;
  std::optional<RecognitionResult> recognition;  // present iff autonomous
  bool recording = false;
  std::optional<std::size_t> session_index;  // present iff a record was written
  Mode mode = Mode::Manual;
  bool collided = false;
};

/// Owns world and robot state and advances them one tick at a time. Not
/// thread-safe: a single tick thread drives it; other threads talk to it
/// through the service inbox.
class ControlLoop {
 public:
  ControlLoop(sim::WorldModel world, RuntimeConfig config);

  void attach_model(std::shared_ptr<const EigenModel> model, std::shared_ptr<const ProjectedDataset> dataset);
  bool has_model() const noexcept { return model_ && dataset_; }

  /// NotReady when switching to autonomous without a model.
  void set_mode(Mode mode);
  Mode mode() const noexcept { return mode_; }
  void set_pilot(Pilot pilot) noexcept { pilot_ = pilot; }
  Pilot pilot() const noexcept { return pilot_; }

  /// Latest-wins teleop slot; the previous command is overwritten.
  void submit_command(const CommandTriple& command) noexcept { teleop_ = command; }

  void start_recording(SessionWriter writer);
  std::optional<SessionWriter> stop_recording();
  bool recording() const noexcept { return recorder_.has_value(); }
  const SessionWriter* recorder() const noexcept { return recorder_ ? &*recorder_ : nullptr; }

  /// sense -> decide -> step -> record on cadence.
  TickReport run_tick();

  const sim::RobotState& state() const noexcept { return state_; }
  const sim::WorldModel& world() const noexcept { return world_; }
  const RuntimeConfig& config() const noexcept { return config_; }
  std::uint64_t ticks() const noexcept { return tick_; }

 private:
  sim::WorldModel world_;
  RuntimeConfig config_;
  sim::SimConfig sim_;
  sim::RobotState state_;
  std::shared_ptr<const EigenModel> model_;
  std::shared_ptr<const ProjectedDataset> dataset_;
  Mode mode_ = Mode::Manual;
  Pilot pilot_ = Pilot::Teleop;
  CommandTriple teleop_{};
  std::optional<SessionWriter> recorder_;
  std::uint64_t recording_since_ = 0;
  std::uint64_t tick_ = 0;
};

/// Optional callbacks around every tick, used to bridge a network service.
struct LoopHooks {
  std::function<void(ControlLoop&)> before_tick;
  std::function<void(const TickReport&)> after_tick;
};

/// Drives `steps` ticks recording at the configured rate. With the teacher
/// pilot any collision aborts with CollisionDuringDemo and the partial
/// session is removed. Returns the session label.
std::string record_demo(const sim::WorldModel& world, const RuntimeConfig& config, std::size_t steps, Pilot pilot,
                        std::optional<std::string> label = std::nullopt, const LoopHooks& hooks = {});

struct DriveSummary {
  std::size_t ticks = 0;
  std::size_t collisions = 0;
  Pose2D final_pose;
  std::vector<std::size_t> matched_indices;
};

/// Autonomous closed-loop run from the world's start pose.
DriveSummary drive(const sim::WorldModel& world, const RuntimeConfig& config,
                   std::shared_ptr<const EigenModel> model, std::shared_ptr<const ProjectedDataset> dataset,
                   std::size_t steps, const LoopHooks& hooks = {});

struct EvalReport {
  std::map<std::string, double> agreement_by_rule;
  std::vector<std::pair<std::size_t, double>> reconstruction_error_by_n;  // (n, mean per-image SSE)
  double mean_latency_ms = 0.0;
  std::size_t samples = 0;

  std::string to_json() const;
};

/// Self-recognition agreement per rule, reconstruction error for every
/// n in 1..n_kept, and mean per-query recognition latency.
EvalReport evaluate(const EigenModel& model, const ProjectedDataset& dataset, const LoadedSession& session);

}  // namespace mlr
