#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mlr/runtime.hpp"

/// JSON text frames exchanged with teleoperation clients.
namespace mlr::protocol {

struct CommandMessage {
  CommandTriple command;
};
struct SetModeMessage {
  Mode mode = Mode::Manual;
};
struct RecordMessage {
  bool start = false;
};
struct UnknownMessage {
  std::string type;
};

using ClientMessage = std::variant<CommandMessage, SetModeMessage, RecordMessage, UnknownMessage>;

/// ParseError for malformed JSON or a known type with bad fields.
ClientMessage decode_client_message(std::string_view text);

std::string encode_command(const CommandTriple& command);
std::string encode_set_mode(Mode mode);
std::string encode_record(bool start);

/// Server -> client state frame for one tick.
std::string encode_state(const TickReport& report);
std::string encode_error(std::string_view message);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace mlr::protocol
