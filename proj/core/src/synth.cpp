#include "vigil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vigil/image_io.hpp"
#include "vigil/rng.hpp"

namespace vigil {

namespace fs = std::filesystem;

std::vector<std::string> default_synth_labels(int classes) {
  if (classes == 5)
    return {"Safe Driving", "Texting_left hand", "Talking on the phone_left hand",
            "Texting_right hand", "Talking on the phone_right hand"};
  std::vector<std::string> labels;
  labels.reserve(static_cast<size_t>(classes));
  for (int i = 0; i < classes; ++i) labels.push_back("class" + std::to_string(i));
  return labels;
}

namespace {

struct Motif {
  enum Shape { Disc, Square, BarLeft, BarRight, Diagonal } shape;
  uint8_t r, g, b;
};

// Shape and color together make the classes easy to tell apart, so a small
// network can separate the corpus without the original private imagery.
Motif class_motif(int class_index) {
  static const Motif motifs[] = {
      {Motif::Disc, 235, 235, 235},
      {Motif::Square, 235, 70, 70},
      {Motif::BarLeft, 70, 235, 70},
      {Motif::BarRight, 80, 80, 235},
      {Motif::Diagonal, 235, 235, 70},
  };
  return motifs[class_index % 5];
}

uint8_t jitter_channel(Rng& rng, int base) {
  const int v = base + static_cast<int>(rng.bounded(41)) - 20;
  return static_cast<uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace

Image render_synth_sample(int class_index, int size, uint64_t sample_seed) {
  if (class_index < 0) throw RangeError("synth: class index must be >= 0");
  if (size < 8) throw ConfigError("synth: image size must be at least 8");

  Rng rng(sample_seed);
  Image img = Image::make(size, size, 3);

  // Dark noisy background.
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = static_cast<uint8_t>(14 + rng.bounded(18));

  const Motif motif = class_motif(class_index);
  const uint8_t color[3] = {jitter_channel(rng, motif.r),
                            jitter_channel(rng, motif.g),
                            jitter_channel(rng, motif.b)};

  const int jitter = std::max(1, size / 10);
  const int ox = static_cast<int>(rng.bounded(static_cast<uint64_t>(2 * jitter + 1))) - jitter;
  const int oy = static_cast<int>(rng.bounded(static_cast<uint64_t>(2 * jitter + 1))) - jitter;

  auto paint = [&](int x, int y) {
    if (x < 0 || x >= size || y < 0 || y >= size) return;
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
  };

  switch (motif.shape) {
    case Motif::Disc: {
      const int cx = size / 2 + ox, cy = size / 2 + oy;
      const int radius = size / 4 + static_cast<int>(rng.bounded(3)) - 1;
      for (int y = cy - radius; y <= cy + radius; ++y)
        for (int x = cx - radius; x <= cx + radius; ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
            paint(x, y);
      break;
    }
    case Motif::Square: {
      const int half = size / 5 + static_cast<int>(rng.bounded(3));
      const int cx = size / 4 + ox, cy = 3 * size / 4 + oy;
      for (int y = cy - half; y <= cy + half; ++y)
        for (int x = cx - half; x <= cx + half; ++x) paint(x, y);
      break;
    }
    case Motif::BarLeft: {
      const int bw = std::max(2, size / 6) + static_cast<int>(rng.bounded(2));
      const int x0 = size / 8 + ox;
      for (int y = 0; y < size; ++y)
        for (int x = x0; x < x0 + bw; ++x) paint(x, y);
      break;
    }
    case Motif::BarRight: {
      const int bw = std::max(2, size / 6) + static_cast<int>(rng.bounded(2));
      const int x0 = size - size / 8 - bw + ox;
      for (int y = 0; y < size; ++y)
        for (int x = x0; x < x0 + bw; ++x) paint(x, y);
      break;
    }
    case Motif::Diagonal: {
      const int thick = std::max(2, size / 8);
      for (int y = 0; y < size; ++y)
        for (int t = -thick; t <= thick; ++t) paint(y + ox + t, y + oy);
      break;
    }
  }

  // Sparse salt noise so motifs are not perfectly clean.
  const int specks = size * size / 40;
  for (int i = 0; i < specks; ++i) {
    const int x = static_cast<int>(rng.bounded(static_cast<uint64_t>(size)));
    const int y = static_cast<int>(rng.bounded(static_cast<uint64_t>(size)));
    const uint8_t v = static_cast<uint8_t>(rng.bounded(256));
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
  }
  return img;
}

DatasetManifest generate_synth_dataset(const SynthOptions& options,
                                       const std::string& out_dir) {
  if (options.classes < 2)
    throw ConfigError("synth: need at least 2 classes");
  if (options.per_class < 1)
    throw ConfigError("synth: per_class must be >= 1");

  std::vector<std::string> labels =
      options.labels.empty() ? default_synth_labels(options.classes)
                             : options.labels;
  if (static_cast<int>(labels.size()) != options.classes)
    throw ConfigError("synth: got " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(options.classes) +
                      " classes");

  DatasetManifest manifest;
  manifest.root = out_dir;
  fs::create_directories(out_dir);

  char name[64];
  for (int k = 0; k < options.classes; ++k) {
    const std::string class_dir = "c" + std::to_string(k);
    fs::create_directories(fs::path(out_dir) / class_dir);
    for (int i = 0; i < options.per_class; ++i) {
      std::snprintf(name, sizeof(name), "img_%05d.ppm", i);
      const std::string rel = class_dir + "/" + name;
      const uint64_t sample_seed =
          Rng::mix(Rng::mix(options.seed, static_cast<uint64_t>(k)),
                   static_cast<uint64_t>(i));
      const Image img = render_synth_sample(k, options.size, sample_seed);
      save_image(img, (fs::path(out_dir) / rel).string());
      manifest.entries.push_back({rel, labels[static_cast<size_t>(k)]});
    }
  }
  manifest.rebuild_labels();
  manifest.save((fs::path(out_dir) / "manifest.csv").string());
  return manifest;
}

}  // namespace vigil
