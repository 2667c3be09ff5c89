#include <gtest/gtest.h>

#include <json.hpp>

#include "mlr/error.hpp"
#include "mlr/protocol.hpp"

namespace mlr::protocol {
namespace {

using nlohmann::json;

Errc decode_error(std::string_view text) {
  try {
    decode_client_message(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decoded: " << text;
  return Errc::IoError;
}

TEST(Decode, Command) {
  const auto m = decode_client_message(R"({"type":"command","linear":0.5,"angular":-0.25,"fork":1})");
  ASSERT_TRUE(std::holds_alternative<CommandMessage>(m));
  EXPECT_EQ(std::get<CommandMessage>(m).command, (CommandTriple{0.5, -0.25, 1.0}));
}

TEST(Decode, SetModeAndRecord) {
  EXPECT_EQ(std::get<SetModeMessage>(decode_client_message(R"({"type":"set_mode","mode":"autonomous"})")).mode,
            Mode::Autonomous);
  EXPECT_EQ(std::get<SetModeMessage>(decode_client_message(R"({"type":"set_mode","mode":"manual"})")).mode,
            Mode::Manual);
  EXPECT_TRUE(std::get<RecordMessage>(decode_client_message(R"({"type":"record","action":"start"})")).start);
  EXPECT_FALSE(std::get<RecordMessage>(decode_client_message(R"({"type":"record","action":"stop"})")).start);
}

TEST(Decode, UnknownTypeIsReportedNotRejected) {
  const auto m = decode_client_message(R"({"type":"ping","payload":[1,2]})");
  ASSERT_TRUE(std::holds_alternative<UnknownMessage>(m));
  EXPECT_EQ(std::get<UnknownMessage>(m).type, "ping");
}

TEST(Decode, MalformedInputIsParseError) {
  EXPECT_EQ(decode_error("{not json"), Errc::ParseError);
  EXPECT_EQ(decode_error("[1,2,3]"), Errc::ParseError);
  EXPECT_EQ(decode_error(R"({"linear":1})"), Errc::ParseError);
  EXPECT_EQ(decode_error(R"({"type":7})"), Errc::ParseError);
  EXPECT_EQ(decode_error(R"({"type":"command","linear":"fast","angular":0,"fork":0})"), Errc::ParseError);
  EXPECT_EQ(decode_error(R"({"type":"command","linear":1,"angular":0})"), Errc::ParseError);
  EXPECT_EQ(decode_error(R"({"type":"set_mode","mode":"turbo"})"), Errc::ParseError);
  EXPECT_EQ(decode_error(R"({"type":"record","action":"pause"})"), Errc::ParseError);
}

TEST(Encode, ClientMessagesRoundTrip) {
  const CommandTriple c{0.1, 0.2, 0.3};
  EXPECT_EQ(std::get<CommandMessage>(decode_client_message(encode_command(c))).command, c);
  EXPECT_EQ(std::get<SetModeMessage>(decode_client_message(encode_set_mode(Mode::Autonomous))).mode,
            Mode::Autonomous);
  EXPECT_FALSE(std::get<RecordMessage>(decode_client_message(encode_record(false))).start);
}

TickReport sample_report() {
  TickReport r;
  r.tick = 42;
  r.frame.image = RgbImage(1, 1, 255);
  for (std::size_t k = 0; k < kIrCount; ++k) r.frame.distances[k] = 0.5 * static_cast<double>(k);
  r.frame.pose = {1.5, -2.0, 0.25};
  r.mode = Mode::Manual;
  r.recording = true;
  return r;
}

TEST(Encode, StateWithoutMatch) {
  const json j = json::parse(encode_state(sample_report()));
  EXPECT_EQ(j.at("type"), "state");
  EXPECT_EQ(j.at("tick"), 42);
  EXPECT_EQ(j.at("distances").size(), 8u);
  EXPECT_EQ(j.at("distances")[3].get<double>(), 1.5);
  EXPECT_EQ(j.at("pose").at("x").get<double>(), 1.5);
  EXPECT_EQ(j.at("pose").at("yaw").get<double>(), 0.25);
  EXPECT_EQ(j.at("mode"), "manual");
  EXPECT_EQ(j.at("recording"), true);
  EXPECT_TRUE(j.at("match").is_null());

  // "P6\n1 1\n255\n" followed by one white pixel.
  const auto bytes = base64_decode(j.at("image_ppm_b64").get<std::string>());
  const std::string expected = "P6\n1 1\n255\n\xff\xff\xff";
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), expected);
  EXPECT_EQ(j.at("image_ppm_b64"), "UDYKMSAxCjI1NQr///8=");
}

TEST(Encode, StateWithMatch) {
  TickReport r = sample_report();
  r.mode = Mode::Autonomous;
  RecognitionResult rec;
  rec.best_index = 7;
  rec.command = {0.6, -0.3, 0.0};
  rec.winner_scores = {1.0, 2.0, 0.5, 3.0};
  r.recognition = rec;
  const json j = json::parse(encode_state(r));
  EXPECT_EQ(j.at("mode"), "autonomous");
  const auto& match = j.at("match");
  EXPECT_EQ(match.at("index"), 7);
  EXPECT_EQ(match.at("scores").at("msd").get<double>(), 1.0);
  EXPECT_EQ(match.at("scores").at("smsd").get<double>(), 2.0);
  EXPECT_EQ(match.at("scores").at("mncs").get<double>(), 0.5);
  EXPECT_EQ(match.at("scores").at("smcs").get<double>(), 3.0);
  EXPECT_EQ(match.at("command").at("linear").get<double>(), 0.6);
  EXPECT_EQ(match.at("command").at("angular").get<double>(), -0.3);
}

TEST(Encode, ErrorFrame) {
  const json j = json::parse(encode_error("bad frame"));
  EXPECT_EQ(j.at("type"), "error");
  EXPECT_EQ(j.at("message"), "bad frame");
}

TEST(Base64, RoundTripAndRejection) {
  for (std::size_t n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<std::uint8_t>(i * 37 + 11);
    EXPECT_EQ(base64_decode(base64_encode(data)), data) << n;
  }
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}), "TWFu");
  EXPECT_THROW(base64_decode("TW$u"), Error);
}

}  // namespace
}  // namespace mlr::protocol
