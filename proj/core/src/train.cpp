#include "vigil/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "vigil/rng.hpp"

namespace vigil {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs is required and must be >= 1");
  if (schedule != LrSchedule::Piecewise && base_lr < 0.0)
    throw ConfigError("train: base_lr is required (set it on the command line "
                      "or in the config)");
  if (l1_lambda < 0.0 || l2_lambda < 0.0)
    throw ConfigError("train: regularization strengths must be >= 0");
  if (schedule == LrSchedule::Step && step_period < 1)
    throw ConfigError("train: step schedule period must be >= 1");
  if (schedule == LrSchedule::Step && step_factor <= 0.0)
    throw ConfigError("train: step schedule factor must be positive");
  if (schedule == LrSchedule::Piecewise) {
    if (piecewise.empty() || piecewise.front().first != 0)
      throw ConfigError("train: piecewise schedule needs a boundary at epoch 0");
    for (size_t i = 0; i < piecewise.size(); ++i) {
      if (piecewise[i].second <= 0.0)
        throw ConfigError("train: piecewise rates must be positive");
      if (i > 0 && piecewise[i].first <= piecewise[i - 1].first)
        throw ConfigError("train: piecewise boundaries must be strictly increasing");
    }
  }
}

TrainConfig TrainConfig::from_config(const ConfigDoc& doc) {
  TrainConfig c;
  c.batch_size = static_cast<int>(doc.get_int("batch_size", c.batch_size));
  c.epochs = static_cast<int>(doc.get_int("epochs", 0));
  c.base_lr = doc.get_double("base_lr", -1.0);
  c.l1_lambda = doc.get_double("l1_lambda", 0.0);
  c.l2_lambda = doc.get_double("l2_lambda", 0.0);
  const std::string loss = doc.get_string("loss", "ce");
  if (loss == "ce") c.loss = LossKind::Ce;
  else if (loss == "bce") c.loss = LossKind::Bce;
  else throw ParseError("train config: unknown loss \"" + loss + "\"");

  const std::string sched = doc.get_string("schedule", "constant");
  std::istringstream in(sched);
  std::string kind;
  in >> kind;
  if (kind == "constant") {
    c.schedule = LrSchedule::Constant;
  } else if (kind == "exponential") {
    c.schedule = LrSchedule::Exponential;
  } else if (kind == "step") {
    c.schedule = LrSchedule::Step;
    std::string factor, period;
    if (!(in >> factor >> period))
      throw ParseError("train config: step schedule needs `step <factor> <period>`");
    c.step_factor = parse_double(factor, "step factor");
    c.step_period = static_cast<int>(parse_int(period, "step period"));
  } else if (kind == "piecewise") {
    c.schedule = LrSchedule::Piecewise;
    std::string pair;
    while (in >> pair) {
      const size_t colon = pair.find(':');
      if (colon == std::string::npos)
        throw ParseError("train config: piecewise entries are <epoch>:<lr>, got \"" +
                         pair + "\"");
      c.piecewise.emplace_back(
          static_cast<int>(parse_int(pair.substr(0, colon), "piecewise epoch")),
          parse_double(pair.substr(colon + 1), "piecewise rate"));
    }
  } else {
    throw ParseError("train config: unknown schedule \"" + sched + "\"");
  }
  return c;
}

std::string TrainConfig::schedule_text() const {
  switch (schedule) {
    case LrSchedule::Constant: return "constant";
    case LrSchedule::Exponential: return "exponential";
    case LrSchedule::Step:
      return "step " + format_double(step_factor) + " " +
             std::to_string(step_period);
    case LrSchedule::Piecewise: {
      std::string out = "piecewise";
      for (const auto& [epoch, rate] : piecewise)
        out += " " + std::to_string(epoch) + ":" + format_double(rate);
      return out;
    }
  }
  return "constant";
}

std::string TrainLog::to_csv() const {
  std::string out = "epoch,lr,train_loss,train_acc,val_loss,val_acc,wall_ms\n";
  char buf[256];
  for (const EpochRecord& r : epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                  r.epoch, r.lr, r.train_loss, r.train_acc, r.val_loss,
                  r.val_acc, r.wall_ms);
    out += buf;
  }
  return out;
}

namespace {
constexpr double kProbClamp = 1e-7;
}

double bce_loss(double p, int y, double* dlogit) {
  if (y != 0 && y != 1)
    throw RangeError("bce_loss: target must be 0 or 1, got " + std::to_string(y));
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  if (dlogit) *dlogit = p - static_cast<double>(y);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double ce_loss(std::span<const float> probs, int y, std::span<float> dlogits) {
  if (y < 0 || y >= static_cast<int>(probs.size()))
    throw RangeError("ce_loss: class index " + std::to_string(y) +
                     " outside [0, " + std::to_string(probs.size()) + ")");
  if (!dlogits.empty()) {
    if (dlogits.size() != probs.size())
      throw DimensionError("ce_loss: gradient span size mismatch");
    for (size_t i = 0; i < probs.size(); ++i) dlogits[i] = probs[i];
    dlogits[static_cast<size_t>(y)] -= 1.0f;
  }
  const double q = std::max(static_cast<double>(probs[static_cast<size_t>(y)]),
                            kProbClamp);
  return -std::log(q);
}

namespace {

// Regularization covers conv/fc weight tensors only (D: standard practice);
// ParamSet.w is exactly that set.
template <typename Fn>
void for_each_weight(const ModelWeights& weights, Fn&& fn) {
  for (size_t i = 0; i < weights.params.size(); ++i) {
    const ParamSet& p = weights.params[i];
    if (!p.w.empty()) fn(i, p.w);
  }
}

}  // namespace

double reg_penalty(const ModelWeights& weights, double l1, double l2) {
  if (l1 == 0.0 && l2 == 0.0) return 0.0;
  double abs_sum = 0.0, sq_sum = 0.0;
  for_each_weight(weights, [&](size_t, const Tensor& w) {
    for (float v : w.raw()) {
      abs_sum += std::fabs(static_cast<double>(v));
      sq_sum += static_cast<double>(v) * v;
    }
  });
  return l1 * abs_sum + 0.5 * l2 * sq_sum;
}

void add_reg_gradient(const ModelWeights& weights, double l1, double l2,
                      GradSet& grads) {
  if (l1 == 0.0 && l2 == 0.0) return;
  for_each_weight(weights, [&](size_t i, const Tensor& w) {
    Tensor& g = grads.params[i].w;
    if (g.empty()) g = Tensor(w.n(), w.c(), w.h(), w.w());
    float* gd = g.data();
    const float* wd = w.data();
    for (size_t j = 0; j < w.size(); ++j) {
      const float sign = wd[j] > 0.0f ? 1.0f : (wd[j] < 0.0f ? -1.0f : 0.0f);
      gd[j] += static_cast<float>(l1) * sign + static_cast<float>(l2) * wd[j];
    }
  });
}

double lr_at(const TrainConfig& config, long long global_step, int epoch) {
  switch (config.schedule) {
    case LrSchedule::Constant:
      return config.base_lr;
    case LrSchedule::Exponential: {
      // Iterated multiplication keeps lr(s+1) == lr(s) * 0.95 exact in f64.
      double lr = config.base_lr;
      for (long long s = 0; s < global_step; ++s) lr *= 0.95;
      return lr;
    }
    case LrSchedule::Step:
      return config.base_lr *
             std::pow(config.step_factor, epoch / config.step_period);
    case LrSchedule::Piecewise: {
      double lr = config.piecewise.front().second;
      for (const auto& [boundary, rate] : config.piecewise)
        if (epoch >= boundary) lr = rate;  // boundaries inclusive at the new rate
      return lr;
    }
  }
  return config.base_lr;
}

void sgd_step(ModelWeights& weights, const GradSet& grads, float lr) {
  if (grads.params.size() != weights.params.size())
    throw DimensionError("sgd_step: gradient set does not match parameter set");
  for (size_t i = 0; i < weights.params.size(); ++i) {
    ParamSet& p = weights.params[i];
    const ParamSet& g = grads.params[i];
    auto apply_vec = [lr](std::vector<float>& w, const std::vector<float>& gv) {
      if (gv.empty()) return;
      if (gv.size() != w.size())
        throw DimensionError("sgd_step: gradient axis mismatch");
      for (size_t j = 0; j < w.size(); ++j) w[j] -= lr * gv[j];
    };
    if (!g.w.empty()) {
      if (!(g.w.shape() == p.w.shape()))
        throw DimensionError("sgd_step: weight gradient shape mismatch");
      float* wd = p.w.data();
      const float* gd = g.w.data();
      for (size_t j = 0; j < p.w.size(); ++j) wd[j] -= lr * gd[j];
    }
    apply_vec(p.bias, g.bias);
    apply_vec(p.gamma, g.gamma);
    apply_vec(p.beta, g.beta);
  }
}

SplitPlan split_dataset(int n, double fraction, uint64_t seed) {
  if (n < 1) throw ConfigError("split: dataset must not be empty");
  if (fraction < 0.0 || fraction > 1.0)
    throw ConfigError("split: fraction must be in [0, 1]");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  SplitPlan plan;
  plan.fraction = fraction;
  plan.seed = seed;
  const int train_n = static_cast<int>(std::llround(fraction * n));
  plan.train_indices.assign(order.begin(), order.begin() + train_n);
  plan.val_indices.assign(order.begin() + train_n, order.end());
  return plan;
}

std::vector<SplitPlan> kfold_split(int n, int k, uint64_t seed) {
  if (n < 1) throw ConfigError("kfold: dataset must not be empty");
  if (k < 1 || k > n)
    throw ConfigError("kfold: k must be in [1, n], got k=" + std::to_string(k) +
                      " for n=" + std::to_string(n));
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<SplitPlan> folds;
  folds.reserve(static_cast<size_t>(k));
  int begin = 0;
  for (int f = 0; f < k; ++f) {
    const int size = n / k + (f < n % k ? 1 : 0);
    SplitPlan plan;
    plan.seed = seed;
    plan.fraction = 1.0 - static_cast<double>(size) / n;
    plan.val_indices.assign(order.begin() + begin, order.begin() + begin + size);
    plan.train_indices.assign(order.begin(), order.begin() + begin);
    plan.train_indices.insert(plan.train_indices.end(),
                              order.begin() + begin + size, order.end());
    folds.push_back(std::move(plan));
    begin += size;
  }
  return folds;
}

Dataset Dataset::subset(std::span<const int> indices) const {
  Dataset out;
  out.samples.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (int i : indices) {
    out.samples.push_back(samples[static_cast<size_t>(i)]);
    out.labels.push_back(labels[static_cast<size_t>(i)]);
  }
  return out;
}

namespace {

Tensor gather_batch(const Dataset& data, std::span<const int> indices) {
  const Tensor& first = data.samples[static_cast<size_t>(indices[0])];
  Tensor batch(static_cast<int>(indices.size()), first.c(), first.h(), first.w());
  const size_t per = first.size();
  for (size_t i = 0; i < indices.size(); ++i) {
    const Tensor& s = data.samples[static_cast<size_t>(indices[i])];
    if (s.size() != per)
      throw DimensionError("fit: sample " + std::to_string(indices[i]) +
                           " has a different shape");
    std::copy(s.raw().begin(), s.raw().end(), batch.raw().begin() + i * per);
  }
  return batch;
}

// Head loss averaged over the batch plus the gradient w.r.t. the logits
// (already divided by the batch size). Returns (loss_sum, correct_count).
std::pair<double, int> head_loss_and_grad(const ModelSpec& spec,
                                          const Tensor& logits,
                                          std::span<const int> labels,
                                          LossKind loss, Tensor* dlogits) {
  const int batch = logits.n();
  const int dim = logits.c();
  const float inv_batch = 1.0f / static_cast<float>(batch);
  double loss_sum = 0.0;
  int correct = 0;
  for (int i = 0; i < batch; ++i) {
    std::span<const float> row(logits.data() + logits.index(i, 0, 0, 0),
                               static_cast<size_t>(dim));
    const int y = labels[static_cast<size_t>(i)];
    const std::vector<float> probs = apply_head(spec, row);
    if (argmax_lowest(probs) == y) ++correct;

    if (loss == LossKind::Ce && spec.head == HeadKind::SoftmaxK) {
      std::vector<float> grad(static_cast<size_t>(dim));
      loss_sum += ce_loss(probs, y, grad);
      if (dlogits)
        for (int j = 0; j < dim; ++j)
          dlogits->at(i, j, 0, 0) = grad[static_cast<size_t>(j)] * inv_batch;
    } else if (loss == LossKind::Bce && spec.head == HeadKind::SigmoidBinary) {
      double dlogit = 0.0;
      loss_sum += bce_loss(probs[1], y, &dlogit);
      if (dlogits)
        dlogits->at(i, 0, 0, 0) = static_cast<float>(dlogit) * inv_batch;
    } else {
      throw ConfigError("fit: loss kind does not match the model head "
                        "(ce needs softmax, bce needs sigmoid)");
    }
  }
  return {loss_sum, correct};
}

}  // namespace

std::pair<double, double> evaluate(const ModelSpec& spec,
                                   const ModelWeights& weights,
                                   const Dataset& data, LossKind loss,
                                   int batch_size) {
  if (data.size() == 0) return {0.0, 0.0};
  double loss_sum = 0.0;
  long long correct = 0;
  const int n = static_cast<int>(data.size());
  std::vector<int> indices(static_cast<size_t>(n));
  std::iota(indices.begin(), indices.end(), 0);
  for (int at = 0; at < n; at += batch_size) {
    const int take = std::min(batch_size, n - at);
    std::span<const int> slice(indices.data() + at, static_cast<size_t>(take));
    const Tensor batch = gather_batch(data, slice);
    const Tensor logits = forward(spec, weights, batch);
    std::vector<int> labels(slice.size());
    for (size_t i = 0; i < slice.size(); ++i)
      labels[i] = data.labels[static_cast<size_t>(slice[i])];
    auto [ls, ok] = head_loss_and_grad(spec, logits, labels, loss, nullptr);
    loss_sum += ls;
    correct += ok;
  }
  return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainLog fit(const ModelSpec& spec, ModelWeights& weights, const Dataset& train,
             const Dataset& val, const TrainConfig& config) {
  config.validate();
  if (train.size() == 0) throw ConfigError("fit: training set is empty");
  if (train.size() != train.labels.size())
    throw DimensionError("fit: samples and labels differ in length");
  const int classes = spec.class_count();
  for (size_t i = 0; i < train.labels.size(); ++i)
    if (train.labels[i] < 0 || train.labels[i] >= classes)
      throw RangeError("fit: label " + std::to_string(train.labels[i]) +
                       " at sample " + std::to_string(i) + " outside [0, " +
                       std::to_string(classes) + ")");

  TrainLog log;
  const int n = static_cast<int>(train.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  long long global_step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(Rng::mix(config.seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    long long correct = 0;
    double first_lr = 0.0;
    int batch_index = 0;

    for (int at = 0; at < n; at += config.batch_size, ++batch_index) {
      const int take = std::min(config.batch_size, n - at);
      std::span<const int> slice(order.data() + at, static_cast<size_t>(take));
      const Tensor batch = gather_batch(train, slice);
      std::vector<int> labels(slice.size());
      for (size_t i = 0; i < slice.size(); ++i)
        labels[i] = train.labels[static_cast<size_t>(slice[i])];

      ForwardTape tape = forward_train(spec, weights, batch);
      const Tensor& logits = tape.acts.back();
      Tensor dlogits(logits.n(), logits.c(), 1, 1);
      auto [batch_loss_sum, batch_correct] =
          head_loss_and_grad(spec, logits, labels, config.loss, &dlogits);

      const double batch_loss =
          batch_loss_sum / take +
          reg_penalty(weights, config.l1_lambda, config.l2_lambda);
      if (!std::isfinite(batch_loss))
        throw NumericError("fit: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " +
                           std::to_string(batch_index));

      GradSet grads = backward(spec, weights, tape, dlogits);
      add_reg_gradient(weights, config.l1_lambda, config.l2_lambda, grads);

      const double lr = lr_at(config, global_step, epoch);
      if (batch_index == 0) first_lr = lr;
      sgd_step(weights, grads, static_cast<float>(lr));
      ++global_step;

      loss_sum += batch_loss_sum;
      correct += batch_correct;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = first_lr;
    rec.train_loss = loss_sum / n +
                     reg_penalty(weights, config.l1_lambda, config.l2_lambda);
    rec.train_acc = static_cast<double>(correct) / n;
    if (val.size() > 0) {
      auto [vl, va] = evaluate(spec, weights, val, config.loss, config.batch_size);
      rec.val_loss = vl;
      rec.val_acc = va;
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    log.epochs.push_back(rec);
  }
  return log;
}

GridResult grid_search(const ModelSpec& spec, const Dataset& train,
                       const Dataset& val, const GridSpace& grid,
                       const TrainConfig& base) {
  if (grid.base_lrs.empty() || grid.l2_lambdas.empty())
    throw ConfigError("grid_search: grid axes must not be empty");

  GridResult result;
  result.best_index = -1;
  for (double lr : grid.base_lrs) {
    for (double l2 : grid.l2_lambdas) {
      TrainConfig cell_cfg = base;
      cell_cfg.base_lr = lr;
      cell_cfg.l2_lambda = l2;
      ModelWeights weights = build_model(spec, cell_cfg.seed);
      fit(spec, weights, train, val, cell_cfg);
      auto [vloss, vacc] = evaluate(spec, weights, val, cell_cfg.loss,
                                    cell_cfg.batch_size);
      (void)vloss;
      result.cells.push_back({lr, l2, vacc});
      if (result.best_index < 0 ||
          vacc > result.cells[static_cast<size_t>(result.best_index)].val_accuracy) {
        result.best_index = static_cast<int>(result.cells.size()) - 1;
        result.best = cell_cfg;
      }
    }
  }
  return result;
}

}  // namespace vigil
