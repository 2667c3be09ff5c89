// mlr: record demonstrations, learn an eigenspace, drive by recognition.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>

#include "mlr/error.hpp"
#include "mlr/learning.hpp"
#include "mlr/memory.hpp"
#include "mlr/recognition.hpp"
#include "mlr/runtime.hpp"
#include "mlr/service.hpp"
#include "mlr/simulator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

mlr::sim::WorldModel world_from(const std::string& path, const mlr::RuntimeConfig& config) {
  if (path.empty() || path == "default") return mlr::sim::default_world(config.sim_config());
  return mlr::sim::load_world(path, config.sim_config());
}

struct Served {
  mlr::service::Inbox inbox;
  std::unique_ptr<mlr::service::TeleopServer> server;
};

std::unique_ptr<Served> maybe_serve(bool serve, std::uint16_t port) {
  if (!serve) return nullptr;
  auto served = std::make_unique<Served>();
  served->server = std::make_unique<mlr::service::TeleopServer>(served->inbox, port);
  served->server->start();
  return served;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("mlr"));

  CLI::App app{"Memory-learning-recognition control: record, learn, drive, eval, serve"};
  app.require_subcommand(1);

  mlr::RuntimeConfig config;
  std::string world_path;
  std::string out_dir;
  std::string session_path;
  std::string model_path;
  std::string report_path;
  std::string config_path;
  std::string teacher;
  std::string label;
  std::string rule_name = "ranksum";
  std::string trace_path;
  std::size_t steps = 0;
  std::size_t components = 5;
  bool serve = false;

  const auto add_geometry = [&](CLI::App* sub) {
    sub->add_option("--width", config.image_width, "Camera width in pixels")->capture_default_str();
    sub->add_option("--height", config.image_height, "Camera height in pixels")->capture_default_str();
    sub->add_option("--dt", config.dt, "Tick period in seconds")->capture_default_str();
    sub->add_option("--port", config.port, "WebSocket port for --serve")->capture_default_str();
  };

  auto* record = app.add_subcommand("record", "Record a demonstration session");
  record->add_option("--world", world_path, "World file, or 'default'")->required();
  record->add_option("--out", out_dir, "Session root directory")->required();
  record->add_option("--steps", steps, "Ticks to simulate")->required();
  record->add_option("--teacher", teacher, "Scripted teacher")->check(CLI::IsMember({"wall-follow"}));
  record->add_option("--label", label, "Session label (YYYY-MM-DDTHH-MM-SS); defaults to now");
  record->add_option("--rate", config.record_rate_hz, "Recording rate in Hz")->capture_default_str();
  record->add_flag("--serve", serve, "Expose the WebSocket teleop service while recording");
  add_geometry(record);

  auto* learn = app.add_subcommand("learn", "Learn an eigenspace model from a session");
  learn->add_option("--session", session_path, "Session directory DIR/LABEL")->required();
  learn->add_option("--components", components, "Principal components to keep")->required();
  learn->add_option("--model", model_path, "Output model path")->required();

  auto* drive = app.add_subcommand("drive", "Drive autonomously by recognition");
  drive->add_option("--world", world_path, "World file, or 'default'")->required();
  drive->add_option("--model", model_path, "Model path")->required();
  drive->add_option("--session", session_path, "Training session DIR/LABEL")->required();
  drive->add_option("--rule", rule_name, "msd|smsd|mncs|smcs|ranksum")
      ->check(CLI::IsMember({"msd", "smsd", "mncs", "smcs", "ranksum"}))
      ->capture_default_str();
  drive->add_option("--steps", steps, "Ticks to simulate")->required();
  drive->add_option("--trace", trace_path, "Write one line per tick: tick x y yaw match");
  drive->add_flag("--serve", serve, "Expose the WebSocket service while driving");
  add_geometry(drive);

  auto* eval = app.add_subcommand("eval", "Evaluate a model on a session");
  eval->add_option("--model", model_path, "Model path")->required();
  eval->add_option("--session", session_path, "Session DIR/LABEL")->required();
  eval->add_option("--report", report_path, "JSON report path")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Run the teleop/autonomy service until interrupted");
  serve_cmd->add_option("--config", config_path, "JSON runtime config")->required();

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (record->parsed()) {
      if (teacher.empty() && !serve) {
        throw mlr::Error(mlr::Errc::ConfigError, "record needs --teacher wall-follow or --serve for teleop input");
      }
      config.session_root = out_dir;
      const auto world = world_from(world_path, config);
      auto served = maybe_serve(serve, config.port);
      mlr::LoopHooks hooks;
      if (served) {
        hooks = mlr::service::make_bridge_hooks(*served->server, served->inbox,
                                                {.realtime = true, .dt = config.dt,
                                                 .allow_recording_control = false, .session_root = out_dir});
      }
      const auto pilot = teacher.empty() ? mlr::Pilot::Teleop : mlr::Pilot::Teacher;
      const std::string made =
          mlr::record_demo(world, config, steps, pilot,
                           label.empty() ? std::nullopt : std::optional<std::string>(label), hooks);
      const auto session = mlr::load_session(fs::path(out_dir) / made);
      spdlog::info("recorded {} samples", session.size());
      std::cout << made << "\n";
      return 0;
    }

    if (learn->parsed()) {
      const auto session = mlr::load_session(fs::path(session_path));
      const auto model = mlr::learn_session(session, components);
      mlr::save_model(model_path, model);
      if (static_cast<std::size_t>(model.n_kept()) < components) {
        spdlog::warn("data supports only {} of {} requested components", model.n_kept(), components);
      }
      json out{{"model", model_path}, {"samples", session.size()}, {"dimension", model.dimension()},
               {"components", model.n_kept()}};
      out["eigenvalues"] = std::vector<double>(model.eigenvalues.begin(), model.eigenvalues.end());
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (drive->parsed()) {
      config.rule = mlr::parse_rule(rule_name);
      const auto world = world_from(world_path, config);
      auto model = std::make_shared<const mlr::EigenModel>(mlr::load_model(model_path));
      config.image_width = model->width;
      config.image_height = model->height;
      const auto session = mlr::load_session(fs::path(session_path));
      auto dataset = std::make_shared<const mlr::ProjectedDataset>(mlr::build_projected_dataset(*model, session));

      auto served = maybe_serve(serve, config.port);
      mlr::LoopHooks hooks;
      if (served) {
        hooks = mlr::service::make_bridge_hooks(*served->server, served->inbox,
                                                {.realtime = true, .dt = config.dt,
                                                 .allow_recording_control = false, .session_root = "sessions"});
      }
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw mlr::Error(mlr::Errc::IoError, "cannot open trace " + trace_path);
        auto before = hooks.after_tick;
        hooks.after_tick = [&trace, before](const mlr::TickReport& r) {
          if (before) before(r);
          trace << r.tick << ' ' << json(r.frame.pose.x).dump() << ' ' << json(r.frame.pose.y).dump() << ' '
                << json(r.frame.pose.yaw).dump() << ' ' << (r.recognition ? r.recognition->best_index : 0)
                << (r.collided ? " collided" : "") << '\n';
        };
      }
      const auto summary = mlr::drive(world, config, model, dataset, steps, hooks);
      json out{{"ticks", summary.ticks},
               {"collisions", summary.collisions},
               {"rule", rule_name},
               {"final_pose", {{"x", summary.final_pose.x}, {"y", summary.final_pose.y}, {"yaw", summary.final_pose.yaw}}}};
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (eval->parsed()) {
      const auto model = mlr::load_model(model_path);
      const auto session = mlr::load_session(fs::path(session_path));
      const auto dataset = mlr::build_projected_dataset(model, session);
      const auto report = mlr::evaluate(model, dataset, session);
      std::ofstream out(report_path);
      if (!out) throw mlr::Error(mlr::Errc::IoError, "cannot write " + report_path);
      out << report.to_json() << "\n";
      std::cout << report.to_json() << "\n";
      return 0;
    }

    if (serve_cmd->parsed()) {
      config = mlr::load_runtime_config(config_path);
      const auto world = world_from(config.world_path.string(), config);
      mlr::ControlLoop loop(world, [&] {
        auto c = config;
        c.mode = mlr::Mode::Manual;
        return c;
      }());
      if (!config.model_path.empty()) {
        auto model = std::make_shared<const mlr::EigenModel>(mlr::load_model(config.model_path));
        if (config.session_path.empty()) {
          throw mlr::Error(mlr::Errc::ConfigError, "model_path needs session_path for the recorded commands");
        }
        const auto session = mlr::load_session(config.session_path);
        auto dataset = std::make_shared<const mlr::ProjectedDataset>(mlr::build_projected_dataset(*model, session));
        loop.attach_model(model, dataset);
      }
      loop.set_mode(config.mode);

      mlr::service::Inbox inbox;
      mlr::service::TeleopServer server(inbox, config.port);
      server.start();
      const auto hooks = mlr::service::make_bridge_hooks(
          server, inbox, {.realtime = true, .dt = config.dt, .allow_recording_control = true,
                          .session_root = config.session_root});
      mlr::service::run_service(loop, hooks, g_stop);
      if (auto writer = loop.stop_recording()) {
        spdlog::info("recorded {} samples into {}", writer->size(), writer->directory().string());
      }
      server.stop();
      return 0;
    }
  } catch (const mlr::Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
