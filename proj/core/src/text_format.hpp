#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "mlr/error.hpp"

namespace mlr::detail {

/// Shortest decimal that parses back to the identical double.
inline std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

/// Fixed 17 significant digits.
inline std::string format_real17(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view text, std::string_view what) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(Errc::ParseError, "bad number for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(Errc::ParseError, "bad integer for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace mlr::detail
