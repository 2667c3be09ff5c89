#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mlr {

/// 8-bit interleaved RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void set_gray(int x, int y, std::uint8_t value) { set(x, y, value, value, value); }

  bool operator==(const RgbImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Binary netpbm P6 with header exactly "P6\n<w> <h>\n255\n".
std::string encode_ppm(const RgbImage& image);

/// Accepts any conforming P6 header (whitespace, comments) with maxval 255.
RgbImage decode_ppm(std::string_view bytes);

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace mlr
