#pragma once

#include <span>
#include <vector>

#include "vigil/image.hpp"
#include "vigil/tensor.hpp"

namespace vigil {

// 2x3 affine map from OUTPUT pixel coordinates to INPUT coordinates
// (inverse mapping): in_x = a*x + b*y + tx, in_y = c*x + d*y + ty.
struct AffineMap {
  double a = 1, b = 0, tx = 0;
  double c = 0, d = 1, ty = 0;

  static AffineMap identity() { return {}; }

  // Shifts image content by (dx, dy).
  static AffineMap translation(double dx, double dy);

  // Rotates content by `radians` counterclockwise about (cx, cy).
  static AffineMap rotation(double radians, double cx, double cy);

  // Scales content by `factor` about (cx, cy). factor must be nonzero.
  static AffineMap scale(double factor, double cx, double cy);

  // Shears content along x: rows shift proportionally to their distance
  // from cy.
  static AffineMap shear_x(double sx, double cy);

  void apply(double x, double y, double& ix, double& iy) const {
    ix = a * x + b * y + tx;
    iy = c * x + d * y + ty;
  }

  bool finite() const;
};

// Map equivalent to applying `first` to the image, then `second`.
AffineMap compose(const AffineMap& first, const AffineMap& second);

// Nearest-neighbor resample at pixel centers (sample point (x+0.5, y+0.5));
// out-of-bounds source pixels take `fill` in every channel.
Image affine_transform(const Image& img, const AffineMap& map, uint8_t fill);

// Saturating per-pixel add, clamped to [0, 255].
Image adjust_brightness(const Image& img, int delta);

// Crop to the rectangle then nearest-neighbor resize to out_w x out_h.
Image crop_resize(const Image& img, int rx, int ry, int rw, int rh, int out_w,
                  int out_h);

// Normalized discrete Gaussian of radius ceil(3*sigma), edge-clamped.
Image gaussian_blur(const Image& img, double sigma);
std::vector<double> gaussian_kernel(double sigma);

// Window median, edge-clamped; window must be odd.
Image median_filter(const Image& img, int window);

// Classic (CDF(v) - CDF_min) / (1 - CDF_min) mapping; color images are
// equalized per channel.
Image histogram_equalize(const Image& img);

// v -> round(255 * (v/255)^gamma); gamma must be positive.
Image gamma_correct(const Image& img, double gamma);

// x = (v/255 - mean[c]) / std[c], channel-planar 1 x C x H x W output.
Tensor image_to_tensor(const Image& img, std::span<const float> mean,
                       std::span<const float> stdev);

}  // namespace vigil
