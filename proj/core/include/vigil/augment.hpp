#pragma once

#include <cstdint>
#include <string>

#include "vigil/config.hpp"
#include "vigil/image.hpp"

namespace vigil {

// Sampling range for one augmentation knob; a [0, 0] range is the identity.
struct AugmentRange {
  double lo = 0.0;
  double hi = 0.0;
  bool zero() const { return lo == 0.0 && hi == 0.0; }
};

// Policy file keys (each a `min,max` range):
//   rot_deg     rotation in degrees about the image center
//   shear_x     horizontal shear factor
//   scale       scale delta; the applied factor is 1 + delta
//   trans_px    translation in pixels, drawn separately for x and y
//   brightness  additive brightness delta
//   crop_frac   fraction cropped away (centered), resized back afterwards
struct AugmentPolicy {
  AugmentRange rot_deg;
  AugmentRange shear_x;
  AugmentRange scale;
  AugmentRange trans_px;
  AugmentRange brightness;
  AugmentRange crop_frac;

  bool identity() const;
  void validate() const;

  static AugmentPolicy from_config(const ConfigDoc& doc);
  static AugmentPolicy load(const std::string& path);
  std::string to_config() const;
};

// Pure function of (image, policy, seed): draws one transform chain from the
// declared ranges and applies it.
Image augment_sample(const Image& img, const AugmentPolicy& policy,
                     uint64_t seed);

}  // namespace vigil
