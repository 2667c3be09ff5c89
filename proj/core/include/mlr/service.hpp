#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mlr/protocol.hpp"
#include "mlr/runtime.hpp"

namespace mlr::service {

using ControlEvent = std::variant<protocol::SetModeMessage, protocol::RecordMessage>;

/// Hand-off from network handlers to the tick thread. Teleop commands keep
/// only the newest value; control events queue in arrival order.
class Inbox {
 public:
  struct Batch {
    std::optional<CommandTriple> command;
    std::vector<ControlEvent> controls;
  };

  void post_command(const CommandTriple& command);
  void post_control(ControlEvent event);
  Batch drain();

 private:
  std::mutex mutex_;
  std::optional<CommandTriple> command_;
  std::vector<ControlEvent> controls_;
};

/// WebSocket endpoint speaking the JSON protocol. Runs its own network
/// thread; `broadcast` may be called from any thread.
class TeleopServer {
 public:
  TeleopServer(Inbox& inbox, std::uint16_t port, std::string address = "0.0.0.0");
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and starts accepting. Port 0 picks an ephemeral port.
  void start();
  void stop();
  std::uint16_t port() const;
  std::size_t client_count() const;
  void broadcast(std::string text);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct BridgeOptions {
  bool realtime = true;
  double dt = 0.1;  // wall-clock seconds per tick when realtime
  bool allow_recording_control = true;
  std::filesystem::path session_root = "sessions";
};

/// Tick hooks that apply inbox traffic to the loop, broadcast every report
/// and, when realtime, pace ticks to the configured dt.
LoopHooks make_bridge_hooks(TeleopServer& server, Inbox& inbox, BridgeOptions options);

/// Ticks the loop until `stop` is set or `max_ticks` have run.
void run_service(ControlLoop& loop, const LoopHooks& hooks, const std::atomic<bool>& stop,
                 std::optional<std::size_t> max_ticks = std::nullopt);

}  // namespace mlr::service
