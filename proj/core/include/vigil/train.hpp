#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vigil/config.hpp"
#include "vigil/model.hpp"

namespace vigil {

enum class LrSchedule { Constant, Step, Exponential, Piecewise };
enum class LossKind { Bce, Ce };

struct TrainConfig {
  int batch_size = 64;
  int epochs = 0;        // mandatory, no silent default
  double base_lr = -1.0; // mandatory, no silent default; 0 is a legal rate
  LrSchedule schedule = LrSchedule::Constant;
  double step_factor = 0.5;
  int step_period = 10;                         // epochs
  std::vector<std::pair<int, double>> piecewise; // (epoch boundary, rate)
  double l1_lambda = 0.0;
  double l2_lambda = 0.0;
  uint64_t seed = 0;
  LossKind loss = LossKind::Ce;

  void validate() const;  // throws ConfigError

  // `schedule` value grammar: "constant" | "exponential" |
  // "step <factor> <period>" | "piecewise <epoch>:<lr> [<epoch>:<lr> ...]".
  static TrainConfig from_config(const ConfigDoc& doc);
  std::string schedule_text() const;
};

struct SplitPlan {
  std::vector<int> train_indices;
  std::vector<int> val_indices;
  double fraction = 0.8;
  uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::string to_csv() const;
};

// Binary cross entropy of a probability against a {0,1} target; the
// probability is clamped to [1e-7, 1 - 1e-7] before the logs. When dlogit is
// given it receives the gradient with respect to the pre-sigmoid logit
// (p - y, the fused form).
double bce_loss(double p, int y, double* dlogit = nullptr);

// Multi-class cross entropy of a probability vector against a class index;
// when dlogits is non-empty it receives probs - onehot(y).
double ce_loss(std::span<const float> probs, int y, std::span<float> dlogits = {});

// l1 * sum|w| + 0.5 * l2 * sum(w^2) over conv/fc weights only; biases and
// batch-norm parameters are excluded.
double reg_penalty(const ModelWeights& weights, double l1, double l2);
void add_reg_gradient(const ModelWeights& weights, double l1, double l2,
                      GradSet& grads);

// Pure function of (config, step, epoch). The exponential schedule multiplies
// by 0.95 once per training step, staged in f64 so consecutive values satisfy
// lr(s+1) == lr(s) * 0.95 exactly.
double lr_at(const TrainConfig& config, long long global_step, int epoch);

// w <- w - lr * g over every parameter tensor.
void sgd_step(ModelWeights& weights, const GradSet& grads, float lr);

// Uniform shuffle by seed; the first round(fraction * n) indices train.
SplitPlan split_dataset(int n, double fraction, uint64_t seed);

// Folds are disjoint, cover all indices, and differ in size by at most 1;
// fold i is the validation set of plan i.
std::vector<SplitPlan> kfold_split(int n, int k, uint64_t seed);

struct Dataset {
  std::vector<Tensor> samples;  // each 1 x C x H x W
  std::vector<int> labels;

  size_t size() const { return samples.size(); }
  Dataset subset(std::span<const int> indices) const;
};

// Mini-batch SGD: per batch forward -> loss + regularization -> backward ->
// lr_at -> sgd_step; shuffles per epoch by seed; a final short batch is
// trained with its gradient averaged over its actual size.
TrainLog fit(const ModelSpec& spec, ModelWeights& weights, const Dataset& train,
             const Dataset& val, const TrainConfig& config);

// Mean loss and accuracy of `weights` on a dataset (inference mode).
std::pair<double, double> evaluate(const ModelSpec& spec,
                                   const ModelWeights& weights,
                                   const Dataset& data, LossKind loss,
                                   int batch_size = 64);

struct GridSpace {
  std::vector<double> base_lrs;
  std::vector<double> l2_lambdas;
};
struct GridCell {
  double base_lr = 0.0;
  double l2_lambda = 0.0;
  double val_accuracy = 0.0;
};
struct GridResult {
  TrainConfig best;
  std::vector<GridCell> cells;  // declared order: lr-major, l2 within
  int best_index = 0;
};

// Trains one model per cell from the template config; best cell has the
// highest validation accuracy, ties broken by declaration order.
GridResult grid_search(const ModelSpec& spec, const Dataset& train,
                       const Dataset& val, const GridSpace& grid,
                       const TrainConfig& base);

}  // namespace vigil
