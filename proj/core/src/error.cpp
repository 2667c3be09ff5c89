#include "mlr/error.hpp"

namespace mlr {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::ShapeError: return "ShapeError";
    case Errc::InvalidLabel: return "InvalidLabel";
    case Errc::SessionConflict: return "SessionConflict";
    case Errc::MissingAsset: return "MissingAsset";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NumericalError: return "NumericalError";
    case Errc::InsufficientVariance: return "InsufficientVariance";
    case Errc::VersionError: return "VersionError";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::DegenerateScale: return "DegenerateScale";
    case Errc::InvalidWorld: return "InvalidWorld";
    case Errc::NotReady: return "NotReady";
    case Errc::CollisionDuringDemo: return "CollisionDuringDemo";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      index_(index) {}

}  // namespace mlr
