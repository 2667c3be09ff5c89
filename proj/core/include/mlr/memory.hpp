#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlr/image.hpp"
#include "mlr/types.hpp"

namespace mlr {

/// One timestamped demonstration sample.
struct IORecord {
  std::size_t index = 0;
  std::string image_file;  // relative to the session directory
  IrDistances distances{};
  Pose2D pose;
  CommandTriple command;

  bool operator==(const IORecord&) const = default;
};

struct SessionManifest {
  std::string timestamp_label;
  int image_width = 0;
  int image_height = 0;
  double rate_hz = 0.0;
  std::vector<IORecord> records;

  bool operator==(const SessionManifest&) const = default;
};

inline constexpr std::string_view kManifestFileName = "session.xml";

/// True for labels of the form YYYY-MM-DDTHH-MM-SS with in-range fields.
bool is_valid_label(std::string_view label);
std::string make_label(std::chrono::system_clock::time_point when);

std::string image_file_name(std::size_t index);

std::string serialize_manifest(const SessionManifest& manifest);
SessionManifest parse_manifest(std::string_view xml);

/// Append-only writer for one recording session. Single writer; not shared
/// across threads while recording.
class SessionWriter {
 public:
  /// Creates `<root>/<label>/`, or reopens it when it holds an empty manifest
  /// with the same geometry and rate.
  static SessionWriter open(const std::filesystem::path& root, const std::string& label,
                            int width, int height, double rate_hz);

  /// Writes `img_<index>.ppm` then atomically replaces the manifest.
  std::size_t append(const RgbImage& image, std::span<const double> distances,
                     const Pose2D& pose, const CommandTriple& command);

  const SessionManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& directory() const noexcept { return directory_; }
  std::size_t size() const noexcept { return manifest_.records.size(); }

 private:
  SessionWriter(std::filesystem::path directory, SessionManifest manifest)
      : directory_(std::move(directory)), manifest_(std::move(manifest)) {}

  void flush_manifest() const;

  std::filesystem::path directory_;
  SessionManifest manifest_;
};

/// A completed session; images are read on demand.
class LoadedSession {
 public:
  LoadedSession(std::filesystem::path directory, SessionManifest manifest)
      : directory_(std::move(directory)), manifest_(std::move(manifest)) {}

  const SessionManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& directory() const noexcept { return directory_; }
  const std::string& label() const noexcept { return manifest_.timestamp_label; }
  std::size_t size() const noexcept { return manifest_.records.size(); }
  const IORecord& record(std::size_t index) const { return manifest_.records.at(index); }

  RgbImage read_image(std::size_t index) const;

 private:
  std::filesystem::path directory_;
  SessionManifest manifest_;
};

LoadedSession load_session(const std::filesystem::path& root, const std::string& label);
/// Same as above for a `<root>/<label>` directory path.
LoadedSession load_session(const std::filesystem::path& session_directory);

}  // namespace mlr
