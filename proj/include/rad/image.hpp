#pragma once

#include <cstdint>
#include <vector>

#include "rad/util.hpp"

namespace rad {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major RGB8 raster.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool contains(int col, int row) const noexcept {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }
  Rgb at(int col, int row) const;
  void set(int col, int row, Rgb color);
  const std::vector<std::uint8_t>& bytes() const noexcept { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// 8-bit truecolor PNG, no interlace, filter 0 on every row. Output is a
/// pure function of the pixels.
Bytes encode_png(const RgbImage& image);

}  // namespace rad
