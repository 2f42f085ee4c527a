#include "vigil/image_io.hpp"

#include <fstream>

namespace vigil {

namespace {

bool is_space(uint8_t b) {
  return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\f' ||
         b == '\v';
}

// Reads one decimal integer preceded by at least one whitespace byte.
int read_header_int(std::span<const uint8_t> bytes, size_t& pos,
                    const char* what) {
  if (pos >= bytes.size() || !is_space(bytes[pos]))
    throw FormatError(std::string("pnm: expected whitespace before ") + what +
                      " at offset " + std::to_string(pos));
  while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
  if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
    throw FormatError(std::string("pnm: expected digit for ") + what +
                      " at offset " + std::to_string(pos));
  long long v = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    v = v * 10 + (bytes[pos] - '0');
    if (v > 1 << 30)
      throw FormatError(std::string("pnm: ") + what + " overflows at offset " +
                        std::to_string(pos));
    ++pos;
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<uint8_t> encode_ppm(const Image& img) {
  std::string header;
  header += img.channels == 3 ? "P6" : "P5";
  header += '\n';
  header += std::to_string(img.width);
  header += ' ';
  header += std::to_string(img.height);
  header += '\n';
  header += "255\n";

  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Image decode_ppm(std::span<const uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' ||
      (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("pnm: bad magic at offset 0 (expected P5 or P6)");
  const int channels = bytes[1] == '6' ? 3 : 1;

  size_t pos = 2;
  const int width = read_header_int(bytes, pos, "width");
  const int height = read_header_int(bytes, pos, "height");
  const size_t maxval_at = pos;
  const int maxval = read_header_int(bytes, pos, "maxval");
  if (maxval != 255)
    throw FormatError("pnm: unsupported maxval " + std::to_string(maxval) +
                      " at offset " + std::to_string(maxval_at) +
                      " (only 255)");
  if (pos >= bytes.size() || !is_space(bytes[pos]))
    throw FormatError("pnm: expected single whitespace after maxval at offset " +
                      std::to_string(pos));
  ++pos;

  if (width < 1 || height < 1)
    throw FormatError("pnm: degenerate size " + std::to_string(width) + "x" +
                      std::to_string(height));
  const size_t need =
      static_cast<size_t>(width) * height * static_cast<size_t>(channels);
  if (bytes.size() - pos < need)
    throw FormatError("pnm: truncated payload at offset " +
                      std::to_string(bytes.size()) + ", need " +
                      std::to_string(pos + need) + " bytes");
  if (bytes.size() - pos > need)
    throw FormatError("pnm: trailing bytes at offset " +
                      std::to_string(pos + need));

  Image img = Image::make(width, height, channels);
  std::copy(bytes.begin() + static_cast<ptrdiff_t>(pos), bytes.end(),
            img.pixels.begin());
  return img;
}

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_image(const Image& img, const std::string& path) {
  const std::vector<uint8_t> bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open image for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace vigil
