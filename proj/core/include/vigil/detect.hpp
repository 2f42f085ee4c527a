#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vigil/fatigue.hpp"
#include "vigil/image.hpp"
#include "vigil/model.hpp"

namespace vigil {

// One output record of the offline detector. At least one of the two
// sections (distraction, fatigue) is present.
struct DetectionRecord {
  int frame = 0;
  int64_t ts_ms = 0;

  bool has_distraction = false;
  std::string label;
  std::vector<float> probs;

  bool has_fatigue = false;
  bool eye_closed = false;
  bool mouth_open = false;
  double perclos_pct = 0.0;
  bool drowsy = false;
  int yawns = 0;

  // JSON object with exactly the fields frame, ts_ms, label, probs,
  // eye_closed, mouth_open, perclos_pct, drowsy, yawns (sections optional).
  std::string to_json() const;
};

// Canonical input normalization used by train/eval/detect alike.
Tensor frame_to_input(const Image& img, const ModelSpec& spec);

struct DetectInputs {
  std::vector<std::string> frame_paths;    // PPM frames, already ordered
  std::vector<LandmarkFrame> landmarks;    // may be empty
  const ModelSpec* spec = nullptr;         // with weights: distraction section
  const ModelWeights* weights = nullptr;
  FatigueConfig fatigue;
  double fps = 30.0;  // synthesizes timestamps when no landmarks are given
};

// Streams one record per frame in index order.
void run_detection(const DetectInputs& inputs,
                   const std::function<void(const DetectionRecord&)>& emit);

}  // namespace vigil
