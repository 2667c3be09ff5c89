#include <gtest/gtest.h>

#include <atomic>
#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>
#include <thread>

#include "mlr/memory.hpp"
#include "mlr/service.hpp"
#include "mlr/simulator.hpp"
#include "test_support.hpp"

namespace mlr::service {
namespace {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

class Client {
 public:
  explicit Client(std::uint16_t port) : resolver_(ioc_), ws_(ioc_) {
    const auto results = resolver_.resolve("127.0.0.1", std::to_string(port));
    net::connect(ws_.next_layer(), results.begin(), results.end());
    ws_.handshake("127.0.0.1", "/");
  }

  void send(const std::string& text) { ws_.write(net::buffer(text)); }

  /// Next frame, or nullopt once the server has closed the connection.
  std::optional<json> read() {
    beast::flat_buffer buffer;
    beast::error_code ec;
    ws_.read(buffer, ec);
    if (ec) return std::nullopt;
    return json::parse(beast::buffers_to_string(buffer.data()));
  }

  json read_type(const std::string& type, int max_frames = 200) {
    for (int i = 0; i < max_frames; ++i) {
      auto frame = read();
      if (!frame) break;
      if (frame->at("type") == type) return *frame;
    }
    ADD_FAILURE() << "no '" << type << "' frame received";
    return json{};
  }

  websocket::close_reason close_reason() const { return ws_.reason(); }

 private:
  net::io_context ioc_;
  tcp::resolver resolver_;
  websocket::stream<tcp::socket> ws_;
};

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    RuntimeConfig config;
    config.session_root = dir_.path();
    loop_ = std::make_unique<ControlLoop>(sim::default_world(), config);
    server_ = std::make_unique<TeleopServer>(inbox_, 0, "127.0.0.1");
    server_->start();
    BridgeOptions options;
    options.dt = 0.01;
    options.session_root = dir_.path();
    hooks_ = make_bridge_hooks(*server_, inbox_, options);
    ticker_ = std::thread([this] { run_service(*loop_, hooks_, stop_); });
  }

  void TearDown() override {
    stop_ = true;
    ticker_.join();
    server_->stop();
  }

  std::unique_ptr<Client> connect() {
    auto client = std::make_unique<Client>(server_->port());
    for (int i = 0; i < 200 && server_->client_count() == 0; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return client;
  }

  testing::TempDir dir_;
  Inbox inbox_;
  std::unique_ptr<ControlLoop> loop_;
  std::unique_ptr<TeleopServer> server_;
  LoopHooks hooks_;
  std::atomic<bool> stop_{false};
  std::thread ticker_;
};

TEST_F(ServiceTest, StreamsStateFrames) {
  auto client_ptr = connect();
  Client& client = *client_ptr;
  const json first = client.read_type("state");
  const json second = client.read_type("state");
  EXPECT_GT(second.at("tick").get<int>(), first.at("tick").get<int>());
  EXPECT_EQ(first.at("distances").size(), 8u);
  EXPECT_EQ(first.at("mode"), "manual");
  EXPECT_EQ(first.at("recording"), false);
  EXPECT_TRUE(first.at("match").is_null());
  const auto ppm = protocol::base64_decode(first.at("image_ppm_b64").get<std::string>());
  const RgbImage image = decode_ppm(std::string(ppm.begin(), ppm.end()));
  EXPECT_EQ(image.width(), 64);
  EXPECT_EQ(image.height(), 48);
}

TEST_F(ServiceTest, CommandMovesTheRobot) {
  auto client_ptr = connect();
  Client& client = *client_ptr;
  const double y0 = client.read_type("state").at("pose").at("y").get<double>();
  client.send(protocol::encode_command({1.0, 0.0, 0.0}));
  double y = y0;
  for (int i = 0; i < 100 && y > y0 - 0.3; ++i) y = client.read_type("state").at("pose").at("y").get<double>();
  // The start pose faces -y.
  EXPECT_LT(y, y0 - 0.3);
}

TEST_F(ServiceTest, RecordStartStopLeavesLoadableSession) {
  auto client_ptr = connect();
  Client& client = *client_ptr;
  client.read_type("state");
  client.send(protocol::encode_record(true));
  int recording_frames = 0;
  while (recording_frames < 25) {
    if (client.read_type("state").at("recording") == true) ++recording_frames;
  }
  client.send(protocol::encode_record(false));
  for (int i = 0; i < 200 && client.read_type("state").at("recording") == true; ++i) {
  }

  std::vector<std::filesystem::path> sessions;
  for (const auto& entry : std::filesystem::directory_iterator(dir_.path())) sessions.push_back(entry.path());
  ASSERT_EQ(sessions.size(), 1u);
  const LoadedSession session = load_session(sessions.front());
  EXPECT_GE(session.size(), 1u);
  EXPECT_TRUE(is_valid_label(session.label()));
}

TEST_F(ServiceTest, UnknownTypeIsIgnored) {
  auto client_ptr = connect();
  Client& client = *client_ptr;
  client.send(R"({"type":"ping"})");
  for (int i = 0; i < 5; ++i) EXPECT_EQ(client.read_type("state").at("type"), "state");
}

TEST_F(ServiceTest, MalformedJsonGetsErrorFrameThenClose) {
  auto client_ptr = connect();
  Client& client = *client_ptr;
  client.send("{not json");
  const json error = client.read_type("error");
  EXPECT_FALSE(error.value("message", "").empty());
  bool closed = false;
  for (int i = 0; i < 200 && !closed; ++i) closed = !client.read().has_value();
  EXPECT_TRUE(closed);
  EXPECT_EQ(client.close_reason().code, websocket::close_code::protocol_error);
}

TEST_F(ServiceTest, AutonomousWithoutModelIsRejected) {
  auto client_ptr = connect();
  Client& client = *client_ptr;
  client.send(protocol::encode_set_mode(Mode::Autonomous));
  client.read_type("error");
  EXPECT_EQ(client.read_type("state").at("mode"), "manual");
}

TEST(InboxTest, LatestCommandWinsAndControlsQueue) {
  Inbox inbox;
  inbox.post_command({0.1, 0, 0});
  inbox.post_command({0.2, 0, 0});
  inbox.post_control(protocol::RecordMessage{true});
  inbox.post_control(protocol::SetModeMessage{Mode::Manual});
  auto batch = inbox.drain();
  ASSERT_TRUE(batch.command.has_value());
  EXPECT_EQ(batch.command->linear, 0.2);
  ASSERT_EQ(batch.controls.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<protocol::RecordMessage>(batch.controls[0]));
  batch = inbox.drain();
  EXPECT_FALSE(batch.command.has_value());
  EXPECT_TRUE(batch.controls.empty());
}

}  // namespace
}  // namespace mlr::service
