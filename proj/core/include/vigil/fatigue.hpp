#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "vigil/config.hpp"
#include "vigil/errors.hpp"

namespace vigil {

struct Point2f {
  float x = 0.0f;
  float y = 0.0f;
};

// One video frame of the canonical 68-point face annotation (1-based ids:
// right eye 37-42, left eye 43-48, outer mouth 49-60, inner mouth 61-68).
struct LandmarkFrame {
  int frame_index = 0;
  int64_t timestamp_ms = 0;
  std::array<Point2f, 68> points{};
};

struct FatigueConfig {
  float ear_closed_threshold = 0.21f;
  float mar_open_threshold = 0.6f;
  float perclos_threshold_pct = 20.0f;
  int64_t window_ms = 60000;
  int yawn_min_frames = 15;

  void validate() const;
  static FatigueConfig from_config(const ConfigDoc& doc);
};

enum class Eye { Left, Right };

// EAR = (|p2-p6| + |p3-p5|) / (2 |p1-p4|) over the eye's six landmarks;
// a degenerate horizontal span reads as 0 (fully closed).
float eye_aspect_ratio(const LandmarkFrame& frame, Eye eye);

// MAR = (|p62-p68| + |p63-p67| + |p64-p66|) / (3 |p61-p65|) over the inner
// mouth; degenerate width reads as 0.
float mouth_aspect_ratio(const LandmarkFrame& frame);

struct FrameClass {
  bool eye_closed = false;
  bool mouth_open = false;
};

// eye_closed iff mean(left EAR, right EAR) < threshold (strict);
// mouth_open iff MAR > threshold (strict).
FrameClass classify_frame(const LandmarkFrame& frame, const FatigueConfig& cfg);

struct FatigueSample {
  int64_t ts_ms = 0;
  bool eye_closed = false;
  bool mouth_open = false;
};

// Sliding-window PERCLOS estimator. Intervals between consecutive frames are
// attributed to the earlier frame's state; entries older than the window are
// evicted. drowsy requires the window to span at least half its capacity so
// a short warm-up cannot trigger it.
class FatigueState {
public:
  explicit FatigueState(FatigueConfig cfg);

  void update(int64_t ts_ms, bool eye_closed, bool mouth_open);

  double perclos_pct() const { return perclos_pct_; }
  bool drowsy() const { return drowsy_; }
  int yawn_count() const { return yawns_; }
  int64_t span_ms() const;
  const FatigueConfig& config() const { return cfg_; }

private:
  FatigueConfig cfg_;
  std::deque<FatigueSample> window_;
  int64_t closed_ms_ = 0;
  double perclos_pct_ = 0.0;
  bool drowsy_ = false;
  int yawns_ = 0;
  int mouth_streak_ = 0;
};

// Brute-force reference: recomputes every trailing window from scratch.
// Matches the incremental estimator exactly.
std::vector<double> perclos_oracle(std::span<const FatigueSample> frames,
                                   int64_t window_ms);

// Landmark file: per frame a header line `frame <index> <timestamp_ms>`
// followed by 68 lines `<x> <y>`, frames separated by blank lines.
std::vector<LandmarkFrame> parse_landmarks(const std::string& text);
std::vector<LandmarkFrame> load_landmarks(const std::string& path);

}  // namespace vigil
