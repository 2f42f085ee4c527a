#include "vigil/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace vigil {

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (long long v : counts) t += v;
  return t;
}

long long ConfusionMatrix::diagonal() const {
  long long t = 0;
  for (int i = 0; i < k; ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const int> truth,
                          std::span<const int> predicted, int k) {
  if (truth.size() != predicted.size())
    throw DimensionError("confusion: truth and prediction lengths differ (" +
                         std::to_string(truth.size()) + " vs " +
                         std::to_string(predicted.size()) + ")");
  if (k < 1) throw ConfigError("confusion: class count must be positive");
  ConfusionMatrix cm(k);
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= k)
      throw RangeError("confusion: true label " + std::to_string(t) +
                       " at sample " + std::to_string(i) + " outside [0, " +
                       std::to_string(k) + ")");
    if (p < 0 || p >= k)
      throw RangeError("confusion: predicted label " + std::to_string(p) +
                       " at sample " + std::to_string(i) + " outside [0, " +
                       std::to_string(k) + ")");
    ++cm.at(t, p);
  }
  return cm;
}

MetricsReport per_class_metrics(const ConfusionMatrix& cm) {
  MetricsReport report;
  report.per_class.resize(static_cast<size_t>(cm.k));
  const long long total = cm.total();
  report.accuracy = total > 0 ? static_cast<double>(cm.diagonal()) / total : 0.0;

  for (int c = 0; c < cm.k; ++c) {
    long long tp = cm.at(c, c);
    long long row = 0, col = 0;
    for (int j = 0; j < cm.k; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    const long long fn = row - tp;
    const long long fp = col - tp;

    ClassMetrics& m = report.per_class[static_cast<size_t>(c)];
    m.support = row;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
    else m.degenerate = true;
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
    else m.degenerate = true;
    if (m.precision + m.recall > 0.0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
      m.degenerate = true;
  }
  return report;
}

std::string metrics_to_csv(const MetricsReport& report,
                           std::span<const std::string> labels) {
  std::string out = "class,precision,recall,f1,support\n";
  char buf[256];
  for (size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    const std::string name =
        c < labels.size() ? labels[c] : "class" + std::to_string(c);
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%lld\n", name.c_str(),
                  m.precision, m.recall, m.f1, m.support);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "__accuracy__,%.4f,,,\n", report.accuracy);
  out += buf;
  return out;
}

LatencyReport summarize_latencies(std::vector<double> samples_ms) {
  if (samples_ms.empty())
    throw ConfigError("latency report needs at least one sample");
  LatencyReport report;
  report.count = static_cast<int>(samples_ms.size());
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  report.mean_ms = sum / static_cast<double>(samples_ms.size());

  std::sort(samples_ms.begin(), samples_ms.end());
  auto rank = [&](double q) {
    const size_t idx = static_cast<size_t>(
        std::max<long long>(0, static_cast<long long>(
                                   std::ceil(q * samples_ms.size())) - 1));
    return samples_ms[std::min(idx, samples_ms.size() - 1)];
  };
  report.min_ms = samples_ms.front();
  report.max_ms = samples_ms.back();
  report.p50_ms = rank(0.50);
  report.p95_ms = rank(0.95);
  return report;
}

LatencyReport bench_inference(const ModelSpec& spec, const ModelWeights& weights,
                              int iterations, int warmup) {
  if (iterations < 1)
    throw ConfigError("bench: iterations must be >= 1, got " +
                      std::to_string(iterations));
  if (warmup < 0) throw ConfigError("bench: warmup must be >= 0");

  Tensor frame(1, spec.input_c, spec.input_h, spec.input_w);
  for (size_t i = 0; i < frame.size(); ++i)
    frame.raw()[i] = static_cast<float>((i % 251)) * 0.004f - 0.5f;

  volatile float sink = 0.0f;
  for (int i = 0; i < warmup; ++i) {
    const Tensor logits = forward(spec, weights, frame);
    sink = sink + logits.raw()[0];
  }

  std::vector<double> samples(static_cast<size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor logits = forward(spec, weights, frame);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + logits.raw()[0];
    samples[static_cast<size_t>(i)] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  (void)sink;
  return summarize_latencies(std::move(samples));
}

std::string latency_to_csv(const LatencyReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "count,mean_ms,p50_ms,p95_ms,min_ms,max_ms\n"
                "%d,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                report.count, report.mean_ms, report.p50_ms, report.p95_ms,
                report.min_ms, report.max_ms);
  return buf;
}

}  // namespace vigil
