#include "vigil/fatigue.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace vigil {

void FatigueConfig::validate() const {
  if (ear_closed_threshold <= 0.0f)
    throw ConfigError("fatigue: ear_closed_threshold must be positive");
  if (mar_open_threshold <= 0.0f)
    throw ConfigError("fatigue: mar_open_threshold must be positive");
  if (perclos_threshold_pct <= 0.0f || perclos_threshold_pct > 100.0f)
    throw ConfigError("fatigue: perclos_threshold_pct must be in (0, 100]");
  if (window_ms <= 0) throw ConfigError("fatigue: window_ms must be positive");
  if (yawn_min_frames < 1)
    throw ConfigError("fatigue: yawn_min_frames must be >= 1");
}

FatigueConfig FatigueConfig::from_config(const ConfigDoc& doc) {
  FatigueConfig c;
  c.ear_closed_threshold =
      static_cast<float>(doc.get_double("ear_closed_threshold", c.ear_closed_threshold));
  c.mar_open_threshold =
      static_cast<float>(doc.get_double("mar_open_threshold", c.mar_open_threshold));
  c.perclos_threshold_pct =
      static_cast<float>(doc.get_double("perclos_threshold_pct", c.perclos_threshold_pct));
  c.window_ms = doc.get_int("window_ms", c.window_ms);
  c.yawn_min_frames = static_cast<int>(doc.get_int("yawn_min_frames", c.yawn_min_frames));
  c.validate();
  return c;
}

namespace {

float dist(const Point2f& a, const Point2f& b) {
  const float dx = a.x - b.x;
  const float dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

constexpr float kDegenerate = 1e-6f;

// 0-based index of a 1-based landmark id.
const Point2f& lm(const LandmarkFrame& f, int one_based) {
  return f.points[static_cast<size_t>(one_based - 1)];
}

}  // namespace

float eye_aspect_ratio(const LandmarkFrame& frame, Eye eye) {
  // Right eye occupies ids 37-42, left eye 43-48, each ordered
  // p1 (outer corner), p2, p3 (top), p4 (inner corner), p5, p6 (bottom).
  const int base = eye == Eye::Right ? 37 : 43;
  const float horizontal = dist(lm(frame, base), lm(frame, base + 3));
  if (horizontal < kDegenerate) return 0.0f;
  const float v1 = dist(lm(frame, base + 1), lm(frame, base + 5));
  const float v2 = dist(lm(frame, base + 2), lm(frame, base + 4));
  return (v1 + v2) / (2.0f * horizontal);
}

float mouth_aspect_ratio(const LandmarkFrame& frame) {
  // Inner mouth ids 61-68: 61/65 are the corners, 62-64 the upper arc,
  // 66-68 the lower arc.
  const float width = dist(lm(frame, 61), lm(frame, 65));
  if (width < kDegenerate) return 0.0f;
  const float v1 = dist(lm(frame, 62), lm(frame, 68));
  const float v2 = dist(lm(frame, 63), lm(frame, 67));
  const float v3 = dist(lm(frame, 64), lm(frame, 66));
  return (v1 + v2 + v3) / (3.0f * width);
}

FrameClass classify_frame(const LandmarkFrame& frame, const FatigueConfig& cfg) {
  const float ear = 0.5f * (eye_aspect_ratio(frame, Eye::Left) +
                            eye_aspect_ratio(frame, Eye::Right));
  FrameClass out;
  out.eye_closed = ear < cfg.ear_closed_threshold;
  out.mouth_open = mouth_aspect_ratio(frame) > cfg.mar_open_threshold;
  return out;
}

FatigueState::FatigueState(FatigueConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void FatigueState::update(int64_t ts_ms, bool eye_closed, bool mouth_open) {
  if (!window_.empty() && ts_ms < window_.back().ts_ms)
    throw InputOrderError("fatigue update: timestamp " + std::to_string(ts_ms) +
                          " decreases from " +
                          std::to_string(window_.back().ts_ms));

  if (!window_.empty()) {
    const FatigueSample& prev = window_.back();
    if (prev.eye_closed) closed_ms_ += ts_ms - prev.ts_ms;
  }
  window_.push_back({ts_ms, eye_closed, mouth_open});

  while (window_.front().ts_ms < ts_ms - cfg_.window_ms) {
    const FatigueSample evicted = window_.front();
    window_.pop_front();
    if (evicted.eye_closed)
      closed_ms_ -= window_.front().ts_ms - evicted.ts_ms;
  }

  const int64_t total = window_.back().ts_ms - window_.front().ts_ms;
  perclos_pct_ = total > 0 ? 100.0 * static_cast<double>(closed_ms_) /
                                 static_cast<double>(total)
                           : 0.0;
  drowsy_ = perclos_pct_ >= cfg_.perclos_threshold_pct &&
            2 * total >= cfg_.window_ms;

  mouth_streak_ = mouth_open ? mouth_streak_ + 1 : 0;
  if (mouth_streak_ == cfg_.yawn_min_frames) ++yawns_;
}

int64_t FatigueState::span_ms() const {
  if (window_.empty()) return 0;
  return window_.back().ts_ms - window_.front().ts_ms;
}

std::vector<double> perclos_oracle(std::span<const FatigueSample> frames,
                                   int64_t window_ms) {
  std::vector<double> trace(frames.size(), 0.0);
  for (size_t i = 0; i < frames.size(); ++i) {
    const int64_t lo = frames[i].ts_ms - window_ms;
    size_t first = 0;
    while (frames[first].ts_ms < lo) ++first;
    int64_t closed = 0;
    int64_t total = 0;
    for (size_t j = first; j < i; ++j) {
      const int64_t delta = frames[j + 1].ts_ms - frames[j].ts_ms;
      total += delta;
      if (frames[j].eye_closed) closed += delta;
    }
    trace[i] = total > 0 ? 100.0 * static_cast<double>(closed) /
                               static_cast<double>(total)
                         : 0.0;
  }
  return trace;
}

namespace {

float parse_float_token(const std::string& token, int lineno) {
  try {
    size_t used = 0;
    const float v = std::stof(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ParseError("landmarks line " + std::to_string(lineno) +
                     ": \"" + token + "\" is not a number");
  }
}

}  // namespace

std::vector<LandmarkFrame> parse_landmarks(const std::string& text) {
  std::vector<LandmarkFrame> frames;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  LandmarkFrame current;
  int points_read = -1;  // -1: outside a frame block

  auto finish_frame = [&]() {
    if (points_read < 0) return;
    if (points_read != 68)
      throw FormatError("landmarks frame " + std::to_string(current.frame_index) +
                        ": expected 68 points, got " + std::to_string(points_read));
    frames.push_back(current);
    points_read = -1;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) {  // blank line ends a frame block
      finish_frame();
      continue;
    }
    if (first == "frame") {
      finish_frame();
      std::string idx, ts, extra;
      if (!(ls >> idx >> ts) || (ls >> extra))
        throw FormatError("landmarks line " + std::to_string(lineno) +
                          ": expected `frame <index> <timestamp_ms>`");
      current = LandmarkFrame{};
      current.frame_index =
          static_cast<int>(parse_int(idx, "landmarks line " + std::to_string(lineno) +
                                              " frame index"));
      current.timestamp_ms =
          parse_int(ts, "landmarks line " + std::to_string(lineno) + " timestamp");
      if (!frames.empty() && current.frame_index <= frames.back().frame_index)
        throw InputOrderError("landmarks line " + std::to_string(lineno) +
                              ": frame index " +
                              std::to_string(current.frame_index) +
                              " does not increase past " +
                              std::to_string(frames.back().frame_index));
      points_read = 0;
      continue;
    }
    if (points_read < 0)
      throw FormatError("landmarks line " + std::to_string(lineno) +
                        ": expected a `frame` header before point data");
    if (points_read >= 68)
      throw FormatError("landmarks frame " + std::to_string(current.frame_index) +
                        ": more than 68 points (line " + std::to_string(lineno) + ")");
    std::string xs = first, ys, extra;
    if (!(ls >> ys) || (ls >> extra))
      throw FormatError("landmarks line " + std::to_string(lineno) +
                        ": expected `<x> <y>`");
    Point2f p;
    p.x = parse_float_token(xs, lineno);
    p.y = parse_float_token(ys, lineno);
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw ParseError("landmarks line " + std::to_string(lineno) +
                       ": coordinates must be finite");
    current.points[static_cast<size_t>(points_read)] = p;
    ++points_read;
  }
  finish_frame();
  return frames;
}

std::vector<LandmarkFrame> load_landmarks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open landmark file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_landmarks(buf.str());
}

}  // namespace vigil
