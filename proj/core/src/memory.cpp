#include "mlr/memory.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include "mlr/error.hpp"
#include "text_format.hpp"

namespace mlr {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

bool two_digits(std::string_view s, std::size_t at, int lo, int hi) {
  const char a = s[at];
  const char b = s[at + 1];
  if (a < '0' || a > '9' || b < '0' || b > '9') return false;
  const int v = (a - '0') * 10 + (b - '0');
  return v >= lo && v <= hi;
}

void write_atomically(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(Errc::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(Errc::IoError, "rename to " + target.string() + " failed: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot read manifest " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool safe_relative(const std::string& file) {
  const fs::path p(file);
  if (file.empty() || p.is_absolute()) return false;
  for (const auto& part : p) {
    if (part == "..") return false;
  }
  return true;
}

}  // namespace

bool is_valid_label(std::string_view label) {
  // YYYY-MM-DDTHH-MM-SS
  if (label.size() != 19) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    if (label[i] < '0' || label[i] > '9') return false;
  }
  return label[4] == '-' && two_digits(label, 5, 1, 12) && label[7] == '-' &&
         two_digits(label, 8, 1, 31) && label[10] == 'T' && two_digits(label, 11, 0, 23) &&
         label[13] == '-' && two_digits(label, 14, 0, 59) && label[16] == '-' &&
         two_digits(label, 17, 0, 60);
}

std::string make_label(std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H-%M-%S", &tm);
  return buf;
}

std::string image_file_name(std::size_t index) { return "img_" + std::to_string(index) + ".ppm"; }

std::string serialize_manifest(const SessionManifest& m) {
  using detail::format_real;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<session timestamp=\"" << m.timestamp_label << "\" width=\"" << m.image_width
      << "\" height=\"" << m.image_height << "\" rate=\"" << format_real(m.rate_hz) << "\">\n";
  for (const IORecord& r : m.records) {
    out << "  <record index=\"" << r.index << "\">\n";
    out << "    <image>" << r.image_file << "</image>\n";
    out << "    <distances>";
    for (std::size_t k = 0; k < r.distances.size(); ++k) {
      out << (k ? " " : "") << format_real(r.distances[k]);
    }
    out << "</distances>\n";
    out << "    <pose x=\"" << format_real(r.pose.x) << "\" y=\"" << format_real(r.pose.y)
        << "\" yaw=\"" << format_real(r.pose.yaw) << "\"/>\n";
    out << "    <command linear=\"" << format_real(r.command.linear) << "\" angular=\""
        << format_real(r.command.angular) << "\" fork=\"" << format_real(r.command.fork)
        << "\"/>\n";
    out << "  </record>\n";
  }
  out << "</session>\n";
  return out.str();
}

SessionManifest parse_manifest(std::string_view xml) {
  using detail::parse_int;
  using detail::parse_real;

  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(Errc::ParseError, std::string("manifest xml: ") + e.what());
  }

  const auto session = tree.get_child_optional("session");
  if (!session) throw Error(Errc::ParseError, "manifest: missing <session>");

  const auto attr = [](const pt::ptree& node, const std::string& name) -> std::string {
    const auto value = node.get_optional<std::string>("<xmlattr>." + name);
    if (!value) throw Error(Errc::ParseError, "manifest: missing attribute '" + name + "'");
    return *value;
  };

  SessionManifest m;
  m.timestamp_label = attr(*session, "timestamp");
  m.image_width = parse_int<int>(attr(*session, "width"), "width");
  m.image_height = parse_int<int>(attr(*session, "height"), "height");
  m.rate_hz = parse_real(attr(*session, "rate"), "rate");
  if (!is_valid_label(m.timestamp_label)) {
    throw Error(Errc::ParseError, "manifest: bad timestamp label '" + m.timestamp_label + "'");
  }
  if (m.image_width <= 0 || m.image_height <= 0 || !(m.rate_hz > 0.0)) {
    throw Error(Errc::ParseError, "manifest: geometry and rate must be positive");
  }

  for (const auto& [name, node] : *session) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    if (name != "record") throw Error(Errc::ParseError, "manifest: unexpected element <" + name + ">");

    IORecord r;
    r.index = parse_int<std::size_t>(attr(node, "index"), "index");
    if (r.index != m.records.size()) {
      throw Error(Errc::ParseError, "manifest: record indices must be 0..n-1 without gaps");
    }
    r.image_file = detail::trim(node.get<std::string>("image", ""));
    if (!safe_relative(r.image_file)) {
      throw Error(Errc::ParseError, "manifest: record " + std::to_string(r.index) + " has bad image path");
    }

    std::istringstream dist(node.get<std::string>("distances", ""));
    std::string token;
    std::size_t count = 0;
    while (dist >> token) {
      if (count == kIrCount) throw Error(Errc::ParseError, "manifest: more than 8 distances");
      r.distances[count++] = parse_real(token, "distance");
    }
    if (count != kIrCount) throw Error(Errc::ParseError, "manifest: expected 8 distances");

    const auto pose = node.get_child_optional("pose");
    const auto command = node.get_child_optional("command");
    if (!pose || !command) throw Error(Errc::ParseError, "manifest: record lacks pose or command");
    r.pose = {parse_real(attr(*pose, "x"), "x"), parse_real(attr(*pose, "y"), "y"),
              parse_real(attr(*pose, "yaw"), "yaw")};
    r.command = {parse_real(attr(*command, "linear"), "linear"),
                 parse_real(attr(*command, "angular"), "angular"),
                 parse_real(attr(*command, "fork"), "fork")};
    m.records.push_back(std::move(r));
  }
  return m;
}

SessionWriter SessionWriter::open(const fs::path& root, const std::string& label, int width,
                                  int height, double rate_hz) {
  if (!is_valid_label(label)) throw Error(Errc::InvalidLabel, "label '" + label + "'");
  if (width <= 0 || height <= 0 || !(rate_hz > 0.0)) {
    throw Error(Errc::ConfigError, "session geometry and rate must be positive");
  }

  const fs::path directory = root / label;
  const fs::path manifest_path = directory / kManifestFileName;
  SessionManifest fresh{label, width, height, rate_hz, {}};

  std::error_code ec;
  if (fs::exists(directory, ec)) {
    if (fs::exists(manifest_path)) {
      SessionManifest existing = parse_manifest(read_file(manifest_path));
      if (!existing.records.empty() || existing != fresh) {
        throw Error(Errc::SessionConflict, directory.string() + " already holds a different session");
      }
    } else if (!fs::is_empty(directory, ec)) {
      throw Error(Errc::SessionConflict, directory.string() + " is not empty");
    }
  } else {
    fs::create_directories(directory, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + directory.string() + ": " + ec.message());
  }

  SessionWriter writer(directory, std::move(fresh));
  writer.flush_manifest();
  return writer;
}

void SessionWriter::flush_manifest() const {
  write_atomically(directory_ / kManifestFileName, serialize_manifest(manifest_));
}

std::size_t SessionWriter::append(const RgbImage& image, std::span<const double> distances,
                                  const Pose2D& pose, const CommandTriple& command) {
  if (image.width() != manifest_.image_width || image.height() != manifest_.image_height) {
    throw Error(Errc::ShapeError, "image is " + std::to_string(image.width()) + "x" +
                                      std::to_string(image.height()) + ", session expects " +
                                      std::to_string(manifest_.image_width) + "x" +
                                      std::to_string(manifest_.image_height));
  }
  if (distances.size() != kIrCount) {
    throw Error(Errc::ShapeError, "expected 8 distances, got " + std::to_string(distances.size()));
  }

  IORecord record;
  record.index = manifest_.records.size();
  record.image_file = image_file_name(record.index);
  for (std::size_t k = 0; k < kIrCount; ++k) {
    if (!std::isfinite(distances[k]) || distances[k] < 0.0) {
      throw Error(Errc::ShapeError, "distance " + std::to_string(k) + " out of range");
    }
    record.distances[k] = distances[k];
  }
  record.pose = pose;
  record.command = command;

  write_ppm(directory_ / record.image_file, image);
  manifest_.records.push_back(record);
  try {
    flush_manifest();
  } catch (...) {
    manifest_.records.pop_back();
    throw;
  }
  return record.index;
}

RgbImage LoadedSession::read_image(std::size_t index) const {
  const IORecord& r = record(index);
  const fs::path path = directory_ / r.image_file;
  if (!fs::exists(path)) {
    throw Error(Errc::MissingAsset, "missing image for record " + std::to_string(index), index);
  }
  RgbImage image = read_ppm(path);
  if (image.width() != manifest_.image_width || image.height() != manifest_.image_height) {
    throw Error(Errc::ShapeError, "image for record " + std::to_string(index) + " has wrong geometry");
  }
  return image;
}

LoadedSession load_session(const fs::path& root, const std::string& label) {
  return load_session(root / label);
}

LoadedSession load_session(const fs::path& session_directory) {
  const fs::path manifest_path = session_directory / kManifestFileName;
  if (!fs::exists(manifest_path)) {
    throw Error(Errc::ParseError, "no manifest in " + session_directory.string());
  }
  SessionManifest manifest = parse_manifest(read_file(manifest_path));
  for (const IORecord& r : manifest.records) {
    if (!fs::exists(session_directory / r.image_file)) {
      throw Error(Errc::MissingAsset, "record " + std::to_string(r.index) + " references missing " + r.image_file,
                  r.index);
    }
  }
  return LoadedSession(session_directory, std::move(manifest));
}

}  // namespace mlr
