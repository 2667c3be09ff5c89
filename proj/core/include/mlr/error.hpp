#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mlr {

/// Failure categories surfaced by every module. Callers branch on these,
/// never on message text.
enum class Errc {
  IoError,
  ParseError,
  ShapeError,
  InvalidLabel,
  SessionConflict,
  MissingAsset,
  InsufficientData,
  ConfigError,
  NumericalError,
  InsufficientVariance,
  VersionError,
  CorruptModel,
  DegenerateScale,
  InvalidWorld,
  NotReady,
  CollisionDuringDemo,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  Errc code() const noexcept { return code_; }

  /// Record index for errors tied to one record (MissingAsset).
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace mlr
