#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "support/test_helpers.hpp"
#include "vigil/detect.hpp"
#include "vigil/image_io.hpp"
#include "vigil/synth.hpp"

using namespace vigil;
using namespace vigil::test;

TEST_CASE("synthetic generator writes the manifest and all images") {
  TempDir dir("synth");
  SynthOptions opt;
  opt.classes = 5;
  opt.per_class = 4;
  opt.size = 16;
  opt.seed = 12;
  const DatasetManifest m = generate_synth_dataset(opt, dir.str());
  CHECK(m.entries.size() == 20);
  CHECK(m.class_labels.size() == 5);
  CHECK(m.class_labels[0] == "Safe Driving");
  CHECK(m.class_labels[4] == "Talking on the phone_right hand");
  for (const ManifestEntry& e : m.entries) {
    const Image img = load_image(m.resolve(e));
    CHECK(img.width == 16);
    CHECK(img.channels == 3);
  }
  // reloading the manifest reproduces the label order
  const DatasetManifest loaded = DatasetManifest::load(dir.str("manifest.csv"));
  CHECK(loaded.class_labels == m.class_labels);
}

TEST_CASE("synthetic rendering is deterministic in the seed") {
  const Image a = render_synth_sample(2, 24, 987);
  const Image b = render_synth_sample(2, 24, 987);
  CHECK(a == b);
  const Image c = render_synth_sample(2, 24, 988);
  CHECK(a != c);
  const Image d = render_synth_sample(3, 24, 987);
  CHECK(a != d);
}

TEST_CASE("custom label lists are honored") {
  TempDir dir("synth_labels");
  SynthOptions opt;
  opt.classes = 3;
  opt.per_class = 1;
  opt.size = 16;
  opt.seed = 1;
  opt.labels = {"x", "y", "z"};
  const DatasetManifest m = generate_synth_dataset(opt, dir.str());
  CHECK(m.class_labels == opt.labels);

  opt.labels = {"too", "few"};
  CHECK_THROWS_AS(generate_synth_dataset(opt, dir.str("again")), ConfigError);
}

namespace {

std::vector<LandmarkFrame> synthetic_landmarks(int frames, int closed_until) {
  // Open eyes: EAR 1/3; closed: tiny vertical gaps.
  std::vector<LandmarkFrame> out;
  for (int f = 0; f < frames; ++f) {
    LandmarkFrame lf;
    lf.frame_index = f;
    lf.timestamp_ms = f * 33;
    const bool closed = f < closed_until;
    const float v = closed ? 0.1f : 2.0f;
    auto eye = [&](int base) {
      lf.points[static_cast<size_t>(base - 1)] = {0.0f, 0.0f};
      lf.points[static_cast<size_t>(base + 2)] = {6.0f, 0.0f};
      lf.points[static_cast<size_t>(base + 0)] = {2.0f, v / 2};
      lf.points[static_cast<size_t>(base + 4)] = {2.0f, -v / 2};
      lf.points[static_cast<size_t>(base + 1)] = {4.0f, v / 2};
      lf.points[static_cast<size_t>(base + 3)] = {4.0f, -v / 2};
    };
    eye(37);
    eye(43);
    // closed inner mouth: upper arc (62-64) equals lower arc (66-68)
    lf.points[60] = {0.0f, 10.0f};  // p61
    lf.points[64] = {6.0f, 10.0f};  // p65
    lf.points[61] = lf.points[67] = {1.5f, 10.0f};  // p62 = p68
    lf.points[62] = lf.points[66] = {3.0f, 10.0f};  // p63 = p67
    lf.points[63] = lf.points[65] = {4.5f, 10.0f};  // p64 = p66
    out.push_back(lf);
  }
  return out;
}

}  // namespace

TEST_CASE("detection records: landmarks only") {
  DetectInputs inputs;
  inputs.landmarks = synthetic_landmarks(10, 5);
  std::vector<DetectionRecord> records;
  run_detection(inputs, [&](const DetectionRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == 10);
  CHECK(records[0].has_fatigue);
  CHECK_FALSE(records[0].has_distraction);
  CHECK(records[0].eye_closed);
  CHECK_FALSE(records[9].eye_closed);
  CHECK(records[3].ts_ms == 99);

  // JSON field names are exact; absent section means absent fields
  const auto j = nlohmann::json::parse(records[2].to_json());
  CHECK(j.contains("frame"));
  CHECK(j.contains("ts_ms"));
  CHECK(j.contains("eye_closed"));
  CHECK(j.contains("mouth_open"));
  CHECK(j.contains("perclos_pct"));
  CHECK(j.contains("drowsy"));
  CHECK(j.contains("yawns"));
  CHECK_FALSE(j.contains("label"));
  CHECK_FALSE(j.contains("probs"));
}

TEST_CASE("detection records: frames with a model") {
  TempDir dir("detect_frames");
  SynthOptions opt;
  opt.classes = 5;
  opt.per_class = 1;
  opt.size = 16;
  opt.seed = 9;
  const DatasetManifest m = generate_synth_dataset(opt, dir.str());

  const ModelSpec spec = reference_spec(16, 16, 0.25f, m.class_labels);
  const ModelWeights weights = build_model(spec, 5);

  DetectInputs inputs;
  for (const ManifestEntry& e : m.entries)
    inputs.frame_paths.push_back(m.resolve(e));
  inputs.spec = &spec;
  inputs.weights = &weights;
  inputs.fps = 10.0;

  std::vector<DetectionRecord> records;
  run_detection(inputs, [&](const DetectionRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == 5);
  CHECK(records[0].has_distraction);
  CHECK_FALSE(records[0].has_fatigue);
  CHECK(records[0].probs.size() == 5);
  CHECK(records[1].ts_ms == 100);

  const auto j = nlohmann::json::parse(records[0].to_json());
  CHECK(j.contains("label"));
  CHECK(j.contains("probs"));
  CHECK_FALSE(j.contains("drowsy"));
}

TEST_CASE("a long all-closed landmark stream ends drowsy") {
  // 33 ms cadence for 70 s comfortably fills the 60 s default window.
  const int frames = 2200;
  DetectInputs inputs;
  inputs.landmarks = synthetic_landmarks(frames, frames);
  std::vector<DetectionRecord> records;
  run_detection(inputs, [&](const DetectionRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == static_cast<size_t>(frames));
  CHECK(records.back().drowsy);
  CHECK(records.back().perclos_pct == doctest::Approx(100.0));

  // the brute-force oracle agrees with the streamed trace
  std::vector<FatigueSample> seq;
  for (const LandmarkFrame& lf : inputs.landmarks)
    seq.push_back({lf.timestamp_ms, true, false});
  const std::vector<double> want = perclos_oracle(seq, inputs.fatigue.window_ms);
  for (size_t i = 0; i < records.size(); ++i)
    CHECK(records[i].perclos_pct == want[i]);
}

TEST_CASE("frames plus landmarks yield records with both sections") {
  TempDir dir("detect_both");
  SynthOptions opt;
  opt.classes = 5;
  opt.per_class = 1;
  opt.size = 16;
  opt.seed = 21;
  const DatasetManifest m = generate_synth_dataset(opt, dir.str());

  const ModelSpec spec = reference_spec(16, 16, 0.25f, m.class_labels);
  const ModelWeights weights = build_model(spec, 2);

  DetectInputs inputs;
  for (const ManifestEntry& e : m.entries)
    inputs.frame_paths.push_back(m.resolve(e));
  inputs.landmarks = synthetic_landmarks(5, 2);
  inputs.spec = &spec;
  inputs.weights = &weights;

  std::vector<DetectionRecord> records;
  run_detection(inputs, [&](const DetectionRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == 5);
  for (const DetectionRecord& r : records) {
    CHECK(r.has_distraction);
    CHECK(r.has_fatigue);
    CHECK(r.probs.size() == 5);
  }
  // timestamps come from the landmark stream when both sources are present
  CHECK(records[4].ts_ms == 4 * 33);
}

TEST_CASE("detection rejects empty input and misaligned counts") {
  DetectInputs empty;
  CHECK_THROWS_AS(run_detection(empty, [](const DetectionRecord&) {}),
                  ConfigError);

  DetectInputs misaligned;
  misaligned.frame_paths = {"a.ppm", "b.ppm"};
  misaligned.landmarks = synthetic_landmarks(3, 0);
  CHECK_THROWS_WITH_AS(run_detection(misaligned, [](const DetectionRecord&) {}),
                       doctest::Contains("2"), ConfigError);
}

TEST_CASE("frame_to_input adapts sizes and grayscale") {
  const ModelSpec spec = reference_spec(16, 16, 0.25f, {"a", "b"});
  ModelSpec ok = spec;
  ok.class_labels = {"a", "b", "c", "d", "e"};

  const Image small = Image::make(8, 8, 3, 128);
  const Tensor t = frame_to_input(small, ok);
  CHECK(t.shape() == Shape4{1, 3, 16, 16});

  const Image gray = Image::make(16, 16, 1, 64);
  const Tensor g = frame_to_input(gray, ok);
  CHECK(g.shape() == Shape4{1, 3, 16, 16});
  CHECK(g.at(0, 0, 0, 0) == g.at(0, 2, 0, 0));
}
