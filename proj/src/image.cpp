#include "rad/image.hpp"

#include <array>
#include <string_view>

#include <zlib.h>

#include "rad/error.hpp"

namespace rad {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be > 0");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

Rgb RgbImage::at(int col, int row) const {
  const std::size_t i = (static_cast<std::size_t>(row) * width_ + col) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void RgbImage::set(int col, int row, Rgb c) {
  if (!contains(col, row)) return;
  const std::size_t i = (static_cast<std::size_t>(row) * width_ + col) * 3;
  data_[i] = c.r;
  data_[i + 1] = c.g;
  data_[i + 2] = c.b;
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(Bytes& out, std::string_view type, const Bytes& payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(out.size() - type_at));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

Bytes encode_png(const RgbImage& image) {
  Bytes out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

  Bytes ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width()));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height()));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  put_chunk(out, "IHDR", ihdr);

  const std::size_t stride = static_cast<std::size_t>(image.width()) * 3;
  Bytes raw;
  raw.reserve((stride + 1) * image.height());
  for (int row = 0; row < image.height(); ++row) {
    raw.push_back(0);
    const auto* begin = image.bytes().data() + row * stride;
    raw.insert(raw.end(), begin, begin + stride);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  Bytes packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK) {
    throw Error(ErrorCode::IoError, "zlib compression failed");
  }
  packed.resize(packed_size);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace rad
