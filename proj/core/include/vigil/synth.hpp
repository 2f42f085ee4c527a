#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vigil/image.hpp"
#include "vigil/manifest.hpp"

namespace vigil {

struct SynthOptions {
  int classes = 5;
  int per_class = 200;
  int size = 32;
  uint64_t seed = 0;
  std::vector<std::string> labels;  // filled from default_synth_labels if empty
};

// The default five-class behaviour set; other counts fall back to
// class0..classN-1.
std::vector<std::string> default_synth_labels(int classes);

// One synthetic sample: a class-distinct motif (shape, position and color)
// over a noisy dark background, fully determined by the sample seed.
Image render_synth_sample(int class_index, int size, uint64_t sample_seed);

// Renders the corpus under out_dir (c<k>/img_<i>.ppm) and writes
// out_dir/manifest.csv; returns the manifest.
DatasetManifest generate_synth_dataset(const SynthOptions& options,
                                       const std::string& out_dir);

}  // namespace vigil
