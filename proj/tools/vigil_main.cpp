#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vigil/augment.hpp"
#include "vigil/config.hpp"
#include "vigil/detect.hpp"
#include "vigil/errors.hpp"
#include "vigil/image_io.hpp"
#include "vigil/manifest.hpp"
#include "vigil/metrics.hpp"
#include "vigil/model.hpp"
#include "vigil/model_io.hpp"
#include "vigil/rng.hpp"
#include "vigil/synth.hpp"
#include "vigil/train.hpp"

namespace fs = std::filesystem;
using namespace vigil;

namespace {

constexpr double kLatencyBudgetMs = 80.0;

struct SeedOption {
  std::optional<uint64_t> value;
};

uint64_t require_seed(const SeedOption& seed, const char* verb) {
  if (!seed.value)
    throw ConfigError(std::string(verb) +
                      ": --seed is required (no hidden entropy)");
  return *seed.value;
}

ConfigDoc load_optional_config(const std::string& path) {
  if (path.empty()) return ConfigDoc{};
  return ConfigDoc::load(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_dataset(const DatasetManifest& manifest, const ModelSpec& spec) {
  Dataset data;
  data.samples.reserve(manifest.entries.size());
  data.labels.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries) {
    const int label = manifest.label_index(e.label);
    Image img = load_image(manifest.resolve(e));
    data.samples.push_back(frame_to_input(img, spec));
    data.labels.push_back(label);
  }
  return data;
}

// Maps manifest labels onto the model's label order; every manifest label
// must exist in the model.
std::vector<int> manifest_labels_for_model(const DatasetManifest& manifest,
                                           const ModelSpec& spec) {
  std::vector<int> labels;
  labels.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries) {
    int idx = -1;
    for (size_t i = 0; i < spec.class_labels.size(); ++i)
      if (spec.class_labels[i] == e.label) idx = static_cast<int>(i);
    if (idx < 0)
      throw ConfigError("manifest label \"" + e.label +
                        "\" is not among the model's classes");
    labels.push_back(idx);
  }
  return labels;
}

std::vector<std::string> list_frames(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

int cmd_gen_synth(const SeedOption& seed, const std::string& out_dir,
                  int classes, int per_class, int size,
                  const std::string& labels_arg) {
  SynthOptions options;
  options.seed = require_seed(seed, "gen-synth");
  options.classes = classes;
  options.per_class = per_class;
  options.size = size;
  if (!labels_arg.empty()) {
    std::string cur;
    for (char ch : labels_arg) {
      if (ch == ',') {
        options.labels.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    options.labels.push_back(cur);
  }
  const DatasetManifest manifest = generate_synth_dataset(options, out_dir);
  std::cout << "wrote " << manifest.entries.size() << " images across "
            << manifest.class_labels.size() << " classes under " << out_dir
            << "\n";
  return 0;
}

ModelSpec make_model_spec(const std::string& model_config_path, double alpha,
                          const DatasetManifest& manifest,
                          const Image& probe) {
  if (!model_config_path.empty()) {
    ModelSpec spec = model_from_config(ConfigDoc::load(model_config_path));
    if (spec.class_labels != manifest.class_labels)
      throw ConfigError("model config labels do not match the manifest's "
                        "label set/order");
    return spec;
  }
  return reference_spec(probe.height, probe.width, static_cast<float>(alpha),
                        manifest.class_labels);
}

int cmd_train(const SeedOption& seed, const std::string& data_path,
              const std::string& out_path, const std::string& model_config,
              const std::string& train_config_path, double alpha,
              std::optional<int> epochs, std::optional<double> lr,
              std::optional<int> batch, const std::string& schedule,
              std::optional<double> l1, std::optional<double> l2,
              const std::string& loss, const std::string& log_path) {
  const uint64_t seed_v = require_seed(seed, "train");

  ConfigDoc doc = load_optional_config(train_config_path);
  if (epochs) doc.set("epochs", std::to_string(*epochs));
  if (lr) doc.set("base_lr", format_double(*lr));
  if (batch) doc.set("batch_size", std::to_string(*batch));
  if (!schedule.empty()) doc.set("schedule", schedule);
  if (l1) doc.set("l1_lambda", format_double(*l1));
  if (l2) doc.set("l2_lambda", format_double(*l2));
  if (!loss.empty()) doc.set("loss", loss);
  TrainConfig config = TrainConfig::from_config(doc);
  config.seed = seed_v;
  config.validate();

  const DatasetManifest manifest = DatasetManifest::load(data_path);
  if (manifest.entries.empty()) throw ConfigError("train: manifest is empty");
  const Image probe = load_image(manifest.resolve(manifest.entries.front()));
  const ModelSpec spec = make_model_spec(model_config, alpha, manifest, probe);

  const Dataset all = load_dataset(manifest, spec);
  const SplitPlan split =
      split_dataset(static_cast<int>(all.size()), 0.8, seed_v);
  const Dataset train_set = all.subset(split.train_indices);
  const Dataset val_set = all.subset(split.val_indices);

  ModelWeights weights = build_model(spec, seed_v);
  const TrainLog log = fit(spec, weights, train_set, val_set, config);
  save_weights(spec, weights, out_path);

  const std::string log_out =
      log_path.empty() ? out_path + ".train.csv" : log_path;
  write_text(log_out, log.to_csv());

  if (!log.epochs.empty()) {
    const EpochRecord& last = log.epochs.back();
    std::printf("trained %d epochs: train_acc %.4f val_acc %.4f\n",
                static_cast<int>(log.epochs.size()), last.train_acc,
                last.val_acc);
  }
  std::cout << "weights: " << out_path << "\nlog: " << log_out << "\n";
  return 0;
}

int cmd_eval(const SeedOption& seed, const std::string& data_path,
             const std::string& weights_path, bool all,
             const std::string& out_path) {
  auto [spec, weights] = load_weights(weights_path);
  const DatasetManifest manifest = DatasetManifest::load(data_path);
  if (manifest.entries.empty()) throw ConfigError("eval: manifest is empty");
  const std::vector<int> truth_all = manifest_labels_for_model(manifest, spec);

  std::vector<int> rows(manifest.entries.size());
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  if (!all) {
    const uint64_t seed_v = require_seed(seed, "eval (or pass --all)");
    rows = split_dataset(static_cast<int>(manifest.entries.size()), 0.8, seed_v)
               .val_indices;
  }

  std::vector<int> truth, predicted;
  truth.reserve(rows.size());
  predicted.reserve(rows.size());
  for (int row : rows) {
    const ManifestEntry& e = manifest.entries[static_cast<size_t>(row)];
    const Image img = load_image(manifest.resolve(e));
    const Prediction pred = predict(spec, weights, frame_to_input(img, spec));
    truth.push_back(truth_all[static_cast<size_t>(row)]);
    predicted.push_back(pred.class_index);
  }

  const ConfusionMatrix cm = confusion(truth, predicted, spec.class_count());
  const MetricsReport report = per_class_metrics(cm);
  const std::string csv = metrics_to_csv(report, spec.class_labels);
  if (out_path.empty()) std::cout << csv;
  else write_text(out_path, csv);
  std::fprintf(stderr, "accuracy %.4f over %zu samples\n", report.accuracy,
               rows.size());
  return 0;
}

int cmd_detect(const std::string& frames_dir, const std::string& landmarks_path,
               const std::string& weights_path, const std::string& config_path,
               double fps, const std::string& out_path) {
  DetectInputs inputs;
  inputs.fps = fps;
  if (!frames_dir.empty()) inputs.frame_paths = list_frames(frames_dir);
  if (!landmarks_path.empty()) inputs.landmarks = load_landmarks(landmarks_path);
  if (!config_path.empty())
    inputs.fatigue = FatigueConfig::from_config(ConfigDoc::load(config_path));

  std::optional<std::pair<ModelSpec, ModelWeights>> model;
  if (!weights_path.empty()) {
    model = load_weights(weights_path);
    inputs.spec = &model->first;
    inputs.weights = &model->second;
  }

  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file_out.open(out_path, std::ios::binary | std::ios::trunc);
    if (!file_out) throw IoError("cannot open for writing: " + out_path);
    out = &file_out;
  }
  run_detection(inputs, [&](const DetectionRecord& rec) {
    *out << rec.to_json() << "\n";
  });
  return 0;
}

int cmd_augment(const SeedOption& seed, const std::string& data_path,
                const std::string& policy_path, int multiplier,
                const std::string& out_dir) {
  const uint64_t seed_v = require_seed(seed, "augment");
  if (multiplier < 1) throw ConfigError("augment: multiplier must be >= 1");
  const DatasetManifest manifest = DatasetManifest::load(data_path);
  const AugmentPolicy policy = AugmentPolicy::load(policy_path);

  DatasetManifest out_manifest;
  out_manifest.root = out_dir;
  fs::create_directories(out_dir);

  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    const ManifestEntry& e = manifest.entries[i];
    const fs::path rel(e.path);
    fs::create_directories(fs::path(out_dir) / rel.parent_path());

    // Originals are copied byte-for-byte.
    fs::copy_file(manifest.resolve(e), fs::path(out_dir) / rel,
                  fs::copy_options::overwrite_existing);
    out_manifest.entries.push_back(e);

    const Image img = load_image(manifest.resolve(e));
    for (int v = 0; v < multiplier; ++v) {
      const uint64_t sample_seed =
          Rng::mix(Rng::mix(seed_v, static_cast<uint64_t>(i)),
                   static_cast<uint64_t>(v));
      const Image aug = augment_sample(img, policy, sample_seed);
      fs::path aug_rel = rel;
      aug_rel.replace_filename(rel.stem().string() + "_aug" +
                               std::to_string(v) + rel.extension().string());
      save_image(aug, (fs::path(out_dir) / aug_rel).string());
      out_manifest.entries.push_back({aug_rel.string(), e.label});
    }
  }
  out_manifest.rebuild_labels();
  out_manifest.save((fs::path(out_dir) / "manifest.csv").string());
  std::cout << "wrote " << out_manifest.entries.size() << " entries under "
            << out_dir << "\n";
  return 0;
}

int cmd_bench(const std::string& weights_path, const std::string& size_arg,
              int iterations, int warmup, int threads,
              const std::string& csv_path) {
  auto [spec, weights] = load_weights(weights_path);
  if (!size_arg.empty()) {
    const size_t x = size_arg.find('x');
    if (x == std::string::npos)
      throw ConfigError("bench: --size must be <width>x<height>");
    const int w = static_cast<int>(parse_int(size_arg.substr(0, x), "bench width"));
    const int h = static_cast<int>(parse_int(size_arg.substr(x + 1), "bench height"));
    if (w != spec.input_w || h != spec.input_h)
      throw ConfigError("bench: model was built for " +
                        std::to_string(spec.input_w) + "x" +
                        std::to_string(spec.input_h) + ", asked for " + size_arg);
  }

  ops::set_num_threads(threads);
  const LatencyReport report = bench_inference(spec, weights, iterations, warmup);

  std::printf("input: %dx%d rgb, %d iterations (%d warmup), %d thread(s)\n",
              spec.input_w, spec.input_h, report.count, warmup, threads);
  std::printf("forward latency: mean %.3f ms, p50 %.3f ms, p95 %.3f ms, "
              "min %.3f ms, max %.3f ms\n",
              report.mean_ms, report.p50_ms, report.p95_ms, report.min_ms,
              report.max_ms);
  std::printf("reference budget: %.0f ms per frame -> measured mean %.3f ms (%s)\n",
              kLatencyBudgetMs, report.mean_ms,
              report.mean_ms < kLatencyBudgetMs ? "within budget" : "OVER BUDGET");
  if (!csv_path.empty()) write_text(csv_path, latency_to_csv(report));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vigil: driver fatigue and distraction detection engine"};
  app.require_subcommand(1);

  SeedOption seed;
  std::string global_config;
  int threads = 1;
  app.add_option_function<uint64_t>(
         "--seed", [&](uint64_t v) { seed.value = v; },
         "Seed for every random choice (required by gen-synth, train, "
         "augment, and eval without --all)");
  app.add_option("--config", global_config,
                 "Config file with defaults for the subcommand");
  app.add_option("--threads", threads, "Worker threads for forward passes");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic corpus");
  std::string gen_out;
  int gen_classes = 5, gen_per_class = 200, gen_size = 32;
  std::string gen_labels;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", gen_classes, "Number of classes");
  gen->add_option("--per-class", gen_per_class, "Images per class");
  gen->add_option("--size", gen_size, "Image edge length in pixels");
  gen->add_option("--labels", gen_labels, "Comma-separated class labels");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a manifest");
  std::string train_data, train_out, train_model_cfg, train_log;
  std::string train_schedule, train_loss;
  double train_alpha = 1.0;
  std::optional<int> train_epochs, train_batch;
  std::optional<double> train_lr, train_l1, train_l2;
  train->add_option("--data", train_data, "Dataset manifest CSV")->required();
  train->add_option("--out", train_out, "Output weight file")->required();
  train->add_option("--model", train_model_cfg, "Model config file "
                    "(default: built-in reference architecture)");
  train->add_option("--alpha", train_alpha, "Width multiplier for the "
                    "reference architecture");
  train->add_option("--epochs", [&](const CLI::results_t& r) {
    train_epochs = std::stoi(r[0]); return true; }, "Training epochs (required "
    "here or in --config)");
  train->add_option("--lr", [&](const CLI::results_t& r) {
    train_lr = std::stod(r[0]); return true; }, "Base learning rate (required "
    "here or in --config)");
  train->add_option("--batch", [&](const CLI::results_t& r) {
    train_batch = std::stoi(r[0]); return true; }, "Mini-batch size (default 64)");
  train->add_option("--schedule", train_schedule,
                    "constant | exponential | step <f> <p> | piecewise e:lr ...");
  train->add_option("--l1", [&](const CLI::results_t& r) {
    train_l1 = std::stod(r[0]); return true; }, "L1 regularization strength");
  train->add_option("--l2", [&](const CLI::results_t& r) {
    train_l2 = std::stod(r[0]); return true; }, "L2 regularization strength");
  train->add_option("--loss", train_loss, "ce | bce");
  train->add_option("--log", train_log, "Training log CSV path");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a model on a manifest");
  std::string eval_data, eval_weights, eval_out;
  bool eval_all = false;
  eval->add_option("--data", eval_data, "Dataset manifest CSV")->required();
  eval->add_option("--weights", eval_weights, "Weight file")->required();
  eval->add_flag("--all", eval_all, "Score the full manifest instead of the "
                 "validation split");
  eval->add_option("--out", eval_out, "Metrics CSV path (default stdout)");

  // detect
  auto* detect = app.add_subcommand("detect", "Offline detection over frames "
                                    "and/or landmarks");
  std::string det_frames, det_landmarks, det_weights, det_out;
  double det_fps = 30.0;
  detect->add_option("--frames", det_frames, "Directory of PPM/PGM frames");
  detect->add_option("--landmarks", det_landmarks, "Landmark text file");
  detect->add_option("--weights", det_weights, "Weight file for distraction "
                     "scoring");
  detect->add_option("--fps", det_fps, "Frame rate used to synthesize "
                     "timestamps when no landmarks are given");
  detect->add_option("--out", det_out, "JSON-lines output path (default stdout)");

  // augment
  auto* augment = app.add_subcommand("augment", "Expand a dataset with "
                                     "augmented variants");
  std::string aug_data, aug_policy, aug_out;
  int aug_multiplier = 1;
  augment->add_option("--data", aug_data, "Dataset manifest CSV")->required();
  augment->add_option("--policy", aug_policy, "Augmentation policy file")->required();
  augment->add_option("--multiplier", aug_multiplier,
                      "Augmented variants per source image")->required();
  augment->add_option("--out", aug_out, "Output directory")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Measure single-frame forward "
                                   "latency");
  std::string bench_weights, bench_size, bench_csv;
  int bench_iterations = 200, bench_warmup = 10;
  bench->add_option("--weights", bench_weights, "Weight file")->required();
  bench->add_option("--size", bench_size, "Expected input size <w>x<h> "
                    "(validated against the model)");
  bench->add_option("--iterations", bench_iterations, "Timed iterations");
  bench->add_option("--warmup", bench_warmup, "Unrecorded warmup iterations");
  bench->add_option("--csv", bench_csv, "Latency CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    ops::set_num_threads(threads);
    if (gen->parsed())
      return cmd_gen_synth(seed, gen_out, gen_classes, gen_per_class, gen_size,
                           gen_labels);
    if (train->parsed())
      return cmd_train(seed, train_data, train_out, train_model_cfg,
                       global_config, train_alpha, train_epochs, train_lr,
                       train_batch, train_schedule, train_l1, train_l2,
                       train_loss, train_log);
    if (eval->parsed())
      return cmd_eval(seed, eval_data, eval_weights, eval_all, eval_out);
    if (detect->parsed())
      return cmd_detect(det_frames, det_landmarks, det_weights, global_config,
                        det_fps, det_out);
    if (augment->parsed())
      return cmd_augment(seed, aug_data, aug_policy, aug_multiplier, aug_out);
    if (bench->parsed())
      return cmd_bench(bench_weights, bench_size, bench_iterations,
                       bench_warmup, threads, bench_csv);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IntegrityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
