#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vigil/image.hpp"

namespace vigil {

// Binary PPM (P6, 3-channel) / PGM (P5, grayscale) codec, maxval 255,
// single whitespace-delimited header. decode(encode(img)) == img exactly.
std::vector<uint8_t> encode_ppm(const Image& img);
Image decode_ppm(std::span<const uint8_t> bytes);

Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

}  // namespace vigil
