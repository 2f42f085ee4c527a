#include <doctest.h>

#include <cmath>

#include "support/test_helpers.hpp"
#include "vigil/metrics.hpp"

using namespace vigil;
using namespace vigil::test;

TEST_CASE("confusion matrix fixtures") {
  const std::vector<int> truth = {0, 1, 2, 1};
  const std::vector<int> perfect = truth;
  const ConfusionMatrix diag = confusion(truth, perfect, 3);
  CHECK(diag.diagonal() == 4);
  CHECK(diag.total() == 4);

  const std::vector<int> t1 = {1};
  const std::vector<int> p1 = {2};
  const ConfusionMatrix single = confusion(t1, p1, 3);
  CHECK(single.at(1, 2) == 1);
  CHECK(single.total() == 1);

  const ConfusionMatrix empty = confusion({}, {}, 3);
  CHECK(empty.total() == 0);

  const std::vector<int> bad = {3};
  CHECK_THROWS_AS(confusion(t1, bad, 3), RangeError);
  CHECK_THROWS_AS(confusion(bad, p1, 3), RangeError);
  CHECK_THROWS_AS(confusion(truth, p1, 3), DimensionError);
}

TEST_CASE("per-class metrics reproduce the known fixture row") {
  // TP = 48, FP = 2, FN = 1 -> precision 0.96, recall 48/49
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 48;
  cm.at(1, 0) = 2;
  cm.at(0, 1) = 1;
  const MetricsReport r = per_class_metrics(cm);
  CHECK(r.per_class[0].precision == doctest::Approx(0.96));
  CHECK(r.per_class[0].recall == doctest::Approx(48.0 / 49.0));
  CHECK(std::round(r.per_class[0].precision * 100) / 100 == 0.96);
  CHECK(std::round(r.per_class[0].recall * 100) / 100 == 0.98);
}

TEST_CASE("f1 is the harmonic mean; 0.5/0.5 gives 0.5") {
  ConfusionMatrix cm(2);
  // class 0: TP=1, FN=1, FP=1 -> precision = recall = 0.5
  cm.at(0, 0) = 1;
  cm.at(0, 1) = 1;
  cm.at(1, 0) = 1;
  const MetricsReport r = per_class_metrics(cm);
  CHECK(r.per_class[0].precision == doctest::Approx(0.5));
  CHECK(r.per_class[0].recall == doctest::Approx(0.5));
  CHECK(r.per_class[0].f1 == doctest::Approx(0.5));
}

TEST_CASE("a class absent from truth and prediction reports zeros with a flag") {
  ConfusionMatrix cm(3);
  cm.at(0, 0) = 5;
  cm.at(1, 1) = 5;
  const MetricsReport r = per_class_metrics(cm);
  CHECK(r.per_class[2].precision == 0.0);
  CHECK(r.per_class[2].recall == 0.0);
  CHECK(r.per_class[2].f1 == 0.0);
  CHECK(r.per_class[2].degenerate);
  CHECK_FALSE(r.per_class[0].degenerate);
}

TEST_CASE("accuracy equals trace/total; micro recall equals accuracy") {
  Rng rng(555);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng.bounded(6));
    ConfusionMatrix cm(k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        cm.at(i, j) = static_cast<long long>(rng.bounded(40));
    if (cm.total() == 0) continue;
    const MetricsReport r = per_class_metrics(cm);
    CHECK(r.accuracy ==
          doctest::Approx(static_cast<double>(cm.diagonal()) / cm.total()));

    long long tp_sum = 0, support_sum = 0;
    for (int c = 0; c < k; ++c) {
      tp_sum += cm.at(c, c);
      support_sum += r.per_class[static_cast<size_t>(c)].support;
    }
    const double micro_recall =
        support_sum > 0 ? static_cast<double>(tp_sum) / support_sum : 0.0;
    CHECK(micro_recall == doctest::Approx(r.accuracy).epsilon(1e-12));

    for (const ClassMetrics& m : r.per_class) {
      CHECK(m.precision >= 0.0);
      CHECK(m.precision <= 1.0);
      CHECK(m.recall >= 0.0);
      CHECK(m.recall <= 1.0);
      CHECK(m.f1 >= 0.0);
      CHECK(m.f1 <= 1.0);
    }
  }
}

TEST_CASE("metrics CSV schema") {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 3;
  cm.at(1, 1) = 1;
  cm.at(1, 0) = 1;
  const std::vector<std::string> labels = {"alpha", "beta"};
  const std::string csv = metrics_to_csv(per_class_metrics(cm), labels);
  CHECK(csv.find("class,precision,recall,f1,support\n") == 0);
  CHECK(csv.find("alpha,") != std::string::npos);
  CHECK(csv.find("beta,0.5000,") == std::string::npos);  // beta precision is 1
  CHECK(csv.find("__accuracy__,0.8000,,,\n") != std::string::npos);
}

TEST_CASE("latency summaries keep their ordering invariant") {
  const LatencyReport one = summarize_latencies({4.25});
  CHECK(one.count == 1);
  CHECK(one.mean_ms == 4.25);
  CHECK(one.p50_ms == 4.25);
  CHECK(one.p95_ms == 4.25);
  CHECK(one.min_ms == 4.25);
  CHECK(one.max_ms == 4.25);

  Rng rng(777);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> samples(1 + rng.bounded(500));
    for (double& v : samples) v = rng.uniform_double(0.01, 50.0);
    const LatencyReport r = summarize_latencies(samples);
    CHECK(r.min_ms <= r.p50_ms);
    CHECK(r.p50_ms <= r.p95_ms);
    CHECK(r.p95_ms <= r.max_ms);
    CHECK(r.mean_ms >= r.min_ms);
    CHECK(r.mean_ms <= r.max_ms);
  }
  CHECK_THROWS_AS(summarize_latencies({}), ConfigError);
}

TEST_CASE("bench_inference times the tiny reference model") {
  const ModelSpec spec = reference_spec(32, 32, 0.25f, {"a", "b", "c", "d", "e"});
  const ModelWeights weights = build_model(spec, 4);
  const LatencyReport r = bench_inference(spec, weights, 5, 1);
  CHECK(r.count == 5);
  CHECK(r.min_ms > 0.0);
  CHECK(r.min_ms <= r.p50_ms);
  CHECK(r.p95_ms <= r.max_ms);
  CHECK_THROWS_AS(bench_inference(spec, weights, 0, 0), ConfigError);

  const std::string csv = latency_to_csv(r);
  CHECK(csv.find("count,mean_ms,p50_ms,p95_ms,min_ms,max_ms\n") == 0);
}
