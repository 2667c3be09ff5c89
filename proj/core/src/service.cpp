#include "mlr/service.hpp"

#include <spdlog/spdlog.h>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <future>
#include <set>
#include <thread>

#include "mlr/error.hpp"

namespace mlr::service {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

void Inbox::post_command(const CommandTriple& command) {
  std::lock_guard lock(mutex_);
  command_ = command;
}

void Inbox::post_control(ControlEvent event) {
  std::lock_guard lock(mutex_);
  controls_.push_back(std::move(event));
}

Inbox::Batch Inbox::drain() {
  std::lock_guard lock(mutex_);
  Batch batch{std::exchange(command_, std::nullopt), std::exchange(controls_, {})};
  return batch;
}

namespace {

// Outgoing frames beyond this many are dropped oldest-first for slow clients.
constexpr std::size_t kMaxQueuedFrames = 8;

class Session;

// Touched only from the network thread.
struct Registry {
  std::set<std::shared_ptr<Session>> sessions;
  std::atomic<std::size_t> count{0};

  void add(std::shared_ptr<Session> s) {
    sessions.insert(std::move(s));
    count = sessions.size();
  }
  void remove(const std::shared_ptr<Session>& s) {
    sessions.erase(s);
    count = sessions.size();
  }
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket&& socket, Inbox& inbox, Registry& registry)
      : ws_(std::move(socket)), inbox_(inbox), registry_(registry) {}

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
  }

  void send(std::shared_ptr<const std::string> frame) {
    if (closing_) return;
    if (queue_.size() >= kMaxQueuedFrames) queue_.erase(queue_.begin() + 1);  // front is in flight
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) do_write();
  }

  void close() {
    if (closing_) return;
    closing_ = true;
    if (queue_.empty()) do_close(websocket::close_code::going_away);
  }

 private:
  void on_run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void on_accept(beast::error_code ec) {
    if (ec) {
      spdlog::warn("websocket handshake failed: {}", ec.message());
      return;
    }
    registry_.add(shared_from_this());
    spdlog::info("client connected ({} total)", registry_.count.load());
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      registry_.remove(shared_from_this());
      if (ec != websocket::error::closed) spdlog::info("client dropped: {}", ec.message());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());

    try {
      const protocol::ClientMessage message = protocol::decode_client_message(text);
      std::visit(
          [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, protocol::CommandMessage>) {
              inbox_.post_command(m.command);
            } else if constexpr (std::is_same_v<T, protocol::UnknownMessage>) {
              spdlog::warn("ignoring message of unknown type '{}'", m.type);
            } else {
              inbox_.post_control(m);
            }
          },
          message);
    } catch (const Error& e) {
      spdlog::warn("protocol error, closing connection: {}", e.what());
      registry_.remove(shared_from_this());
      close_code_ = websocket::close_code::protocol_error;
      send(std::make_shared<const std::string>(protocol::encode_error(e.what())));
      closing_ = true;
      return;
    }
    do_read();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      registry_.remove(shared_from_this());
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      do_write();
    } else if (closing_) {
      do_close(close_code_);
    }
  }

  void do_close(websocket::close_code code) {
    ws_.async_close(code, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  Inbox& inbox_;
  Registry& registry_;
  bool closing_ = false;
  websocket::close_code close_code_ = websocket::close_code::going_away;
};

}  // namespace

struct TeleopServer::Impl {
  Impl(Inbox& inbox, std::uint16_t port, std::string address)
      : inbox(inbox), requested_port(port), address(std::move(address)), acceptor(ioc) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
        if (!acceptor.is_open()) return;
      } else {
        std::make_shared<Session>(std::move(socket), inbox, registry)->run();
      }
      do_accept();
    });
  }

  Inbox& inbox;
  std::uint16_t requested_port;
  std::string address;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  Registry registry;
  std::thread thread;
  std::uint16_t bound_port = 0;
  bool running = false;
};

TeleopServer::TeleopServer(Inbox& inbox, std::uint16_t port, std::string address)
    : impl_(std::make_unique<Impl>(inbox, port, std::move(address))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const tcp::endpoint endpoint(net::ip::make_address(impl_->address, ec), impl_->requested_port);
  if (ec) throw Error(Errc::ConfigError, "bad listen address " + impl_->address);
  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::IoError, "cannot listen on port " + std::to_string(impl_->requested_port) + ": " + ec.message());
  impl_->bound_port = acceptor.local_endpoint().port();
  impl_->do_accept();
  impl_->running = true;
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
  spdlog::info("teleop service listening on {}:{}", impl_->address, impl_->bound_port);
}

void TeleopServer::stop() {
  if (!impl_ || !impl_->running) return;
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (const auto& s : std::set(impl->registry.sessions)) s->close();
  });
  // Give close frames a moment to flush before tearing the loop down.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->running = false;
}

std::uint16_t TeleopServer::port() const { return impl_->bound_port; }

std::size_t TeleopServer::client_count() const { return impl_->registry.count.load(); }

void TeleopServer::broadcast(std::string text) {
  auto frame = std::make_shared<const std::string>(std::move(text));
  net::post(impl_->ioc, [impl = impl_.get(), frame] {
    for (const auto& s : impl->registry.sessions) s->send(frame);
  });
}

namespace {

std::string unused_label(const std::filesystem::path& root) {
  auto when = std::chrono::system_clock::now();
  for (;;) {
    std::string label = make_label(when);
    if (!std::filesystem::exists(root / label)) return label;
    when += std::chrono::seconds(1);
  }
}

void apply_control(ControlLoop& loop, const ControlEvent& event, TeleopServer& server, const BridgeOptions& options) {
  try {
    if (const auto* mode = std::get_if<protocol::SetModeMessage>(&event)) {
      loop.set_mode(mode->mode);
      spdlog::info("mode -> {}", to_string(mode->mode));
      return;
    }
    const auto& record = std::get<protocol::RecordMessage>(event);
    if (!options.allow_recording_control) {
      server.broadcast(protocol::encode_error("recording is controlled by the command line in this run"));
      return;
    }
    if (record.start && !loop.recording()) {
      const auto& c = loop.config();
      loop.start_recording(SessionWriter::open(options.session_root, unused_label(options.session_root),
                                               c.image_width, c.image_height, c.record_rate_hz));
      spdlog::info("recording into {}", loop.recorder()->directory().string());
    } else if (!record.start && loop.recording()) {
      const auto writer = loop.stop_recording();
      spdlog::info("recorded {} samples into {}", writer->size(), writer->directory().string());
    }
  } catch (const Error& e) {
    spdlog::warn("control request rejected: {}", e.what());
    server.broadcast(protocol::encode_error(e.what()));
  }
}

}  // namespace

LoopHooks make_bridge_hooks(TeleopServer& server, Inbox& inbox, BridgeOptions options) {
  using clock = std::chrono::steady_clock;
  auto deadline = std::make_shared<std::optional<clock::time_point>>();

  LoopHooks hooks;
  hooks.before_tick = [&server, &inbox, options](ControlLoop& loop) {
    Inbox::Batch batch = inbox.drain();
    for (const ControlEvent& event : batch.controls) apply_control(loop, event, server, options);
    if (batch.command) loop.submit_command(*batch.command);
  };
  hooks.after_tick = [&server, options, deadline](const TickReport& report) {
    server.broadcast(protocol::encode_state(report));
    if (!options.realtime) return;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(options.dt));
    if (!*deadline) *deadline = clock::now();
    **deadline += period;
    std::this_thread::sleep_until(**deadline);
  };
  return hooks;
}

void run_service(ControlLoop& loop, const LoopHooks& hooks, const std::atomic<bool>& stop,
                 std::optional<std::size_t> max_ticks) {
  for (std::size_t i = 0; !stop.load() && (!max_ticks || i < *max_ticks); ++i) {
    if (hooks.before_tick) hooks.before_tick(loop);
    const TickReport report = loop.run_tick();
    if (hooks.after_tick) hooks.after_tick(report);
  }
}

}  // namespace mlr::service
