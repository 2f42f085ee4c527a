#pragma once

#include <cstdint>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

// 8-bit raster, row-major, channel-interleaved; 1 (grayscale) or 3 (RGB)
// channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> pixels;

  static Image make(int width, int height, int channels, uint8_t fill = 0) {
    if (width < 1 || height < 1)
      throw DimensionError("image: width and height must be positive");
    if (channels != 1 && channels != 3)
      throw DimensionError("image: channels must be 1 or 3");
    Image img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.assign(
        static_cast<size_t>(width) * height * channels, fill);
    return img;
  }

  size_t index(int x, int y, int c = 0) const {
    return (static_cast<size_t>(y) * width + x) * channels + c;
  }

  uint8_t& at(int x, int y, int c = 0) { return pixels[index(x, y, c)]; }
  uint8_t at(int x, int y, int c = 0) const { return pixels[index(x, y, c)]; }

  bool operator==(const Image&) const = default;
};

}  // namespace vigil
