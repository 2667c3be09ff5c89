#include "mlr/protocol.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <json.hpp>

#include "mlr/error.hpp"

namespace mlr::protocol {

using json = nlohmann::json;
namespace base64 = boost::beast::detail::base64;

namespace {

json command_json(const CommandTriple& c) {
  return {{"linear", c.linear}, {"angular", c.angular}, {"fork", c.fork}};
}

double number_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(Errc::ParseError, std::string("message field '") + key + "' must be a number");
  }
  return it->get<double>();
}

std::string string_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::ParseError, std::string("message field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

ClientMessage decode_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::ParseError, "message must be a JSON object");
  const std::string type = string_field(j, "type");

  if (type == "command") {
    return CommandMessage{{number_field(j, "linear"), number_field(j, "angular"), number_field(j, "fork")}};
  }
  if (type == "set_mode") {
    const std::string mode = string_field(j, "mode");
    if (mode == "manual") return SetModeMessage{Mode::Manual};
    if (mode == "autonomous") return SetModeMessage{Mode::Autonomous};
    throw Error(Errc::ParseError, "unknown mode '" + mode + "'");
  }
  if (type == "record") {
    const std::string action = string_field(j, "action");
    if (action == "start") return RecordMessage{true};
    if (action == "stop") return RecordMessage{false};
    throw Error(Errc::ParseError, "unknown record action '" + action + "'");
  }
  return UnknownMessage{type};
}

std::string encode_command(const CommandTriple& command) {
  json j = command_json(command);
  j["type"] = "command";
  return j.dump();
}

std::string encode_set_mode(Mode mode) {
  return json{{"type", "set_mode"}, {"mode", std::string(to_string(mode))}}.dump();
}

std::string encode_record(bool start) {
  return json{{"type", "record"}, {"action", start ? "start" : "stop"}}.dump();
}

std::string encode_state(const TickReport& report) {
  const auto& frame = report.frame;
  const std::string ppm = encode_ppm(frame.image);
  json j;
  j["type"] = "state";
  j["tick"] = report.tick;
  j["image_ppm_b64"] =
      base64_encode({reinterpret_cast<const std::uint8_t*>(ppm.data()), ppm.size()});
  j["distances"] = frame.distances;
  j["pose"] = {{"x", frame.pose.x}, {"y", frame.pose.y}, {"yaw", frame.pose.yaw}};
  j["mode"] = std::string(to_string(report.mode));
  j["recording"] = report.recording;
  if (report.recognition) {
    const auto& r = *report.recognition;
    j["match"] = {{"index", r.best_index},
                  {"scores",
                   {{"msd", r.winner_scores.msd},
                    {"smsd", r.winner_scores.smsd},
                    {"mncs", r.winner_scores.mncs},
                    {"smcs", r.winner_scores.smcs}}},
                  {"command", command_json(r.command)}};
  } else {
    j["match"] = nullptr;
  }
  return j.dump();
}

std::string encode_error(std::string_view message) {
  return json{{"type", "error"}, {"message", std::string(message)}}.dump();
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(base64::encoded_size(bytes.size()), '\0');
  out.resize(base64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(base64::decoded_size(text.size()));
  const auto [written, consumed] = base64::decode(out.data(), text.data(), text.size());
  for (std::size_t i = consumed; i < text.size(); ++i) {
    if (text[i] != '=') throw Error(Errc::ParseError, "invalid base64 input");
  }
  out.resize(written);
  return out;
}

}  // namespace mlr::protocol
