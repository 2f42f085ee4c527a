#include "vigil/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace vigil {

AffineMap AffineMap::translation(double dx, double dy) {
  AffineMap m;
  m.tx = -dx;
  m.ty = -dy;
  return m;
}

AffineMap AffineMap::rotation(double radians, double cx, double cy) {
  // Inverse of a forward rotation: rotate output coordinates by -radians
  // about the center.
  const double co = std::cos(radians);
  const double si = std::sin(radians);
  AffineMap m;
  m.a = co;
  m.b = si;
  m.c = -si;
  m.d = co;
  m.tx = cx - co * cx - si * cy;
  m.ty = cy + si * cx - co * cy;
  return m;
}

AffineMap AffineMap::scale(double factor, double cx, double cy) {
  if (factor == 0.0 || !std::isfinite(factor))
    throw ConfigError("affine scale: factor must be finite and nonzero");
  const double inv = 1.0 / factor;
  AffineMap m;
  m.a = inv;
  m.d = inv;
  m.tx = cx - inv * cx;
  m.ty = cy - inv * cy;
  return m;
}

AffineMap AffineMap::shear_x(double sx, double cy) {
  AffineMap m;
  m.b = -sx;
  m.tx = sx * cy;
  return m;
}

bool AffineMap::finite() const {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(tx) &&
         std::isfinite(c) && std::isfinite(d) && std::isfinite(ty);
}

AffineMap compose(const AffineMap& first, const AffineMap& second) {
  // Resulting map sends output coords through `second`, then `first`.
  AffineMap m;
  m.a = first.a * second.a + first.b * second.c;
  m.b = first.a * second.b + first.b * second.d;
  m.tx = first.a * second.tx + first.b * second.ty + first.tx;
  m.c = first.c * second.a + first.d * second.c;
  m.d = first.c * second.b + first.d * second.d;
  m.ty = first.c * second.tx + first.d * second.ty + first.ty;
  return m;
}

Image affine_transform(const Image& img, const AffineMap& map, uint8_t fill) {
  if (!map.finite()) throw ConfigError("affine_transform: non-finite map");
  Image out = Image::make(img.width, img.height, img.channels, fill);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double sx, sy;
      map.apply(x + 0.5, y + 0.5, sx, sy);
      const int px = static_cast<int>(std::floor(sx));
      const int py = static_cast<int>(std::floor(sy));
      if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(px, py, c);
    }
  }
  return out;
}

Image adjust_brightness(const Image& img, int delta) {
  Image out = img;
  for (uint8_t& v : out.pixels)
    v = static_cast<uint8_t>(std::clamp(static_cast<int>(v) + delta, 0, 255));
  return out;
}

Image crop_resize(const Image& img, int rx, int ry, int rw, int rh, int out_w,
                  int out_h) {
  if (rw < 1 || rh < 1)
    throw RangeError("crop_resize: rectangle area must be positive, got " +
                     std::to_string(rw) + "x" + std::to_string(rh));
  if (rx < 0 || ry < 0 || rx + rw > img.width || ry + rh > img.height)
    throw RangeError("crop_resize: rectangle (" + std::to_string(rx) + "," +
                     std::to_string(ry) + ")+" + std::to_string(rw) + "x" +
                     std::to_string(rh) + " outside " +
                     std::to_string(img.width) + "x" +
                     std::to_string(img.height));
  if (out_w < 1 || out_h < 1)
    throw RangeError("crop_resize: output size must be positive");

  Image out = Image::make(out_w, out_h, img.channels);
  for (int y = 0; y < out_h; ++y) {
    const double sy = ry + (y + 0.5) * rh / out_h;
    const int py = std::min(ry + rh - 1, static_cast<int>(std::floor(sy)));
    for (int x = 0; x < out_w; ++x) {
      const double sx = rx + (x + 0.5) * rw / out_w;
      const int px = std::min(rx + rw - 1, static_cast<int>(std::floor(sx)));
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(px, py, c);
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) throw ConfigError("gaussian_blur: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    kernel[static_cast<size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

Image gaussian_blur(const Image& img, double sigma) {
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);

  // Two separable passes in double precision, rounded once at the end.
  std::vector<double> mid(img.pixels.size());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, img.width - 1);
          acc += kernel[static_cast<size_t>(i + radius)] * img.at(sx, y, c);
        }
        mid[img.index(x, y, c)] = acc;
      }

  Image out = Image::make(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = std::clamp(y + i, 0, img.height - 1);
          acc += kernel[static_cast<size_t>(i + radius)] * mid[img.index(x, sy, c)];
        }
        out.at(x, y, c) =
            static_cast<uint8_t>(std::clamp<long>(std::lround(acc), 0, 255));
      }
  return out;
}

Image median_filter(const Image& img, int window) {
  if (window < 1 || window % 2 == 0)
    throw ConfigError("median_filter: window must be odd, got " +
                      std::to_string(window));
  const int radius = window / 2;
  Image out = Image::make(img.width, img.height, img.channels);
  std::vector<uint8_t> values(static_cast<size_t>(window) * window);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        size_t n = 0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const int sx = std::clamp(x + dx, 0, img.width - 1);
            const int sy = std::clamp(y + dy, 0, img.height - 1);
            values[n++] = img.at(sx, sy, c);
          }
        auto middle = values.begin() + static_cast<ptrdiff_t>(n / 2);
        std::nth_element(values.begin(), middle, values.begin() + static_cast<ptrdiff_t>(n));
        out.at(x, y, c) = *middle;
      }
  return out;
}

Image histogram_equalize(const Image& img) {
  Image out = img;
  const long long total = static_cast<long long>(img.width) * img.height;
  for (int c = 0; c < img.channels; ++c) {
    long long hist[256] = {};
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) ++hist[img.at(x, y, c)];

    long long cdf[256];
    long long running = 0;
    long long cdf_min = 0;
    for (int v = 0; v < 256; ++v) {
      running += hist[v];
      cdf[v] = running;
      if (cdf_min == 0 && hist[v] > 0) cdf_min = running;
    }
    const long long denom = total - cdf_min;
    if (denom == 0) continue;  // constant channel stays as-is

    uint8_t lut[256];
    for (int v = 0; v < 256; ++v)
      lut[v] = static_cast<uint8_t>(std::clamp<long long>(
          std::llround(255.0 * static_cast<double>(cdf[v] - cdf_min) / denom),
          0, 255));
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(x, y, c) = lut[img.at(x, y, c)];
  }
  return out;
}

Image gamma_correct(const Image& img, double gamma) {
  if (gamma <= 0.0 || !std::isfinite(gamma))
    throw ConfigError("gamma_correct: gamma must be positive");
  uint8_t lut[256];
  for (int v = 0; v < 256; ++v)
    lut[v] = static_cast<uint8_t>(std::clamp<long long>(
        std::llround(255.0 * std::pow(v / 255.0, gamma)), 0, 255));
  Image out = img;
  for (uint8_t& v : out.pixels) v = lut[v];
  return out;
}

Tensor image_to_tensor(const Image& img, std::span<const float> mean,
                       std::span<const float> stdev) {
  if (static_cast<int>(mean.size()) != img.channels ||
      static_cast<int>(stdev.size()) != img.channels)
    throw DimensionError("image_to_tensor: mean/std must have one entry per "
                         "channel (" + std::to_string(img.channels) + ")");
  for (float s : stdev)
    if (s == 0.0f) throw ConfigError("image_to_tensor: std must be nonzero");

  Tensor out(1, img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    const float m = mean[static_cast<size_t>(c)];
    const float inv = 1.0f / stdev[static_cast<size_t>(c)];
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(0, c, y, x) = (img.at(x, y, c) / 255.0f - m) * inv;
  }
  return out;
}

}  // namespace vigil
