#include "vigil/detect.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "vigil/image_io.hpp"
#include "vigil/transforms.hpp"

namespace vigil {

namespace {
using ordered_json = nlohmann::ordered_json;
}

std::string DetectionRecord::to_json() const {
  ordered_json j;
  j["frame"] = frame;
  j["ts_ms"] = ts_ms;
  if (has_distraction) {
    j["label"] = label;
    j["probs"] = probs;
  }
  if (has_fatigue) {
    j["eye_closed"] = eye_closed;
    j["mouth_open"] = mouth_open;
    j["perclos_pct"] = perclos_pct;
    j["drowsy"] = drowsy;
    j["yawns"] = yawns;
  }
  return j.dump();
}

Tensor frame_to_input(const Image& img, const ModelSpec& spec) {
  Image fitted = img;
  if (fitted.channels == 1 && spec.input_c == 3) {
    Image rgb = Image::make(fitted.width, fitted.height, 3);
    for (int y = 0; y < fitted.height; ++y)
      for (int x = 0; x < fitted.width; ++x)
        for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = fitted.at(x, y, 0);
    fitted = std::move(rgb);
  } else if (fitted.channels != spec.input_c) {
    throw DimensionError("frame has " + std::to_string(fitted.channels) +
                         " channels but the model expects " +
                         std::to_string(spec.input_c));
  }
  if (fitted.width != spec.input_w || fitted.height != spec.input_h)
    fitted = crop_resize(fitted, 0, 0, fitted.width, fitted.height,
                         spec.input_w, spec.input_h);

  const std::vector<float> mean(static_cast<size_t>(spec.input_c), 0.5f);
  const std::vector<float> stdev(static_cast<size_t>(spec.input_c), 0.5f);
  return image_to_tensor(fitted, mean, stdev);
}

void run_detection(const DetectInputs& inputs,
                   const std::function<void(const DetectionRecord&)>& emit) {
  const bool with_frames = !inputs.frame_paths.empty();
  const bool with_landmarks = !inputs.landmarks.empty();
  const bool with_model = inputs.spec != nullptr && inputs.weights != nullptr;

  if (!with_frames && !with_landmarks)
    throw ConfigError("detect: no input, give a frame directory and/or a "
                      "landmark file");
  if (with_model && !with_frames)
    throw ConfigError("detect: distraction scoring needs image frames");
  if (with_frames && with_landmarks &&
      inputs.frame_paths.size() != inputs.landmarks.size())
    throw ConfigError("detect: frame counts are misaligned, " +
                      std::to_string(inputs.frame_paths.size()) +
                      " image frames vs " +
                      std::to_string(inputs.landmarks.size()) +
                      " landmark frames");
  if (inputs.fps <= 0.0) throw ConfigError("detect: fps must be positive");

  const size_t count =
      with_landmarks ? inputs.landmarks.size() : inputs.frame_paths.size();
  FatigueState state(inputs.fatigue);

  for (size_t i = 0; i < count; ++i) {
    DetectionRecord rec;
    if (with_landmarks) {
      const LandmarkFrame& lf = inputs.landmarks[i];
      rec.frame = lf.frame_index;
      rec.ts_ms = lf.timestamp_ms;
      const FrameClass fc = classify_frame(lf, inputs.fatigue);
      state.update(lf.timestamp_ms, fc.eye_closed, fc.mouth_open);
      rec.has_fatigue = true;
      rec.eye_closed = fc.eye_closed;
      rec.mouth_open = fc.mouth_open;
      rec.perclos_pct = state.perclos_pct();
      rec.drowsy = state.drowsy();
      rec.yawns = state.yawn_count();
    } else {
      rec.frame = static_cast<int>(i);
      rec.ts_ms = static_cast<int64_t>(
          std::llround(static_cast<double>(i) * 1000.0 / inputs.fps));
    }

    if (with_model) {
      const Image img = load_image(inputs.frame_paths[i]);
      const Tensor input = frame_to_input(img, *inputs.spec);
      const Prediction pred = predict(*inputs.spec, *inputs.weights, input);
      rec.has_distraction = true;
      rec.label = pred.label;
      rec.probs = pred.probs;
    }
    emit(rec);
  }
}

}  // namespace vigil
