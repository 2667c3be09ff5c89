#include "mlr/image.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <limits>

#include "mlr/error.hpp"

namespace mlr {

RgbImage::RgbImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(Errc::ShapeError, "image dimensions must be positive");
  }
  data_.assign(pixel_count() * 3, fill);
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t offset =
      (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  data_[offset] = r;
  data_[offset + 1] = g;
  data_[offset + 2] = b;
}

std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  const auto bytes = image.bytes();
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return out;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view text) : text_(text) {}

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long next_int(const char* what) {
    skip_space_and_comments();
    long value = 0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first) {
      throw Error(Errc::ParseError, std::string("ppm: bad ") + what);
    }
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

  std::size_t& pos() { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

RgbImage decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(Errc::ParseError, "ppm: missing P6 magic");
  }
  HeaderReader reader(bytes.substr(2));
  const long width = reader.next_int("width");
  const long height = reader.next_int("height");
  const long maxval = reader.next_int("maxval");
  if (width <= 0 || height <= 0 || width > std::numeric_limits<int>::max() ||
      height > std::numeric_limits<int>::max()) {
    throw Error(Errc::ParseError, "ppm: non-positive dimensions");
  }
  if (maxval != 255) {
    throw Error(Errc::ParseError, "ppm: only maxval 255 is supported");
  }
  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t offset = 2 + reader.pos();
  if (offset >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[offset]))) {
    throw Error(Errc::ParseError, "ppm: truncated header");
  }
  ++offset;

  RgbImage image(static_cast<int>(width), static_cast<int>(height));
  const auto payload = image.bytes();
  if (bytes.size() - offset < payload.size()) {
    throw Error(Errc::ParseError, "ppm: truncated payload");
  }
  std::copy_n(bytes.data() + offset, payload.size(), reinterpret_cast<char*>(payload.data()));
  return image;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  const std::string data = encode_ppm(image);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(data);
}

}  // namespace mlr
