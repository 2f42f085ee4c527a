#pragma once

#include <span>
#include <string>
#include <vector>

#include "vigil/model.hpp"

namespace vigil {

// K x K counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
  int k = 0;
  std::vector<long long> counts;

  explicit ConfusionMatrix(int classes = 0)
      : k(classes), counts(static_cast<size_t>(classes) * classes, 0) {}

  long long& at(int truth, int predicted) {
    return counts[static_cast<size_t>(truth) * k + predicted];
  }
  long long at(int truth, int predicted) const {
    return counts[static_cast<size_t>(truth) * k + predicted];
  }
  long long total() const;
  long long diagonal() const;
};

ConfusionMatrix confusion(std::span<const int> truth,
                          std::span<const int> predicted, int k);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
  bool degenerate = false;  // some denominator was 0; metrics reported as 0
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
};

MetricsReport per_class_metrics(const ConfusionMatrix& cm);

// `class,precision,recall,f1,support` rows plus a final
// `__accuracy__,<value>,,,` row, 4 decimal places.
std::string metrics_to_csv(const MetricsReport& report,
                           std::span<const std::string> labels);

struct LatencyReport {
  int count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

// Nearest-rank percentiles over the raw samples.
LatencyReport summarize_latencies(std::vector<double> samples_ms);

// Runs `warmup` unrecorded forwards, then times `iterations` forwards of a
// single-frame batch with a monotonic clock.
LatencyReport bench_inference(const ModelSpec& spec, const ModelWeights& weights,
                              int iterations, int warmup);

std::string latency_to_csv(const LatencyReport& report);

}  // namespace vigil
