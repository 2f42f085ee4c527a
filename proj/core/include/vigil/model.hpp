#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vigil/config.hpp"
#include "vigil/ops.hpp"
#include "vigil/tensor.hpp"

namespace vigil {

enum class LayerKind {
  StandardConv,
  DepthwiseSeparable,
  MaxPool,
  AvgPool,
  Flatten,
  FullyConnected,
};

enum class Activation { Relu, None };
enum class HeadKind { SigmoidBinary, SoftmaxK };

struct LayerSpec {
  LayerKind kind = LayerKind::StandardConv;
  int out_channels = 0;  // conv kinds, before the width multiplier
  int kernel = 3;        // 1, 3 or 5
  int stride = 1;
  int padding = 0;
  int window_h = 0, window_w = 0;  // pools
  int units = 0;                   // fully-connected
  bool has_bias = true;
  bool has_bn = false;  // default true for depthwise-separable blocks
  Activation activation = Activation::None;

  static LayerSpec conv(int out, int k, int stride, int padding, bool bn = true,
                        Activation act = Activation::Relu);
  static LayerSpec dsblock(int out, int k, int stride, int padding);
  static LayerSpec max_pool(int window, int stride);
  static LayerSpec avg_pool(int window_h, int window_w, int stride);
  static LayerSpec flatten();
  static LayerSpec fc(int units);
};

struct ModelSpec {
  int input_c = 3;
  int input_h = 224;
  int input_w = 224;
  float width_multiplier = 1.0f;
  std::vector<LayerSpec> layers;
  HeadKind head = HeadKind::SoftmaxK;
  std::vector<std::string> class_labels;

  int class_count() const { return static_cast<int>(class_labels.size()); }
};

// max(1, round(alpha * base)).
int scaled_channels(int base, float alpha);

// MobileNet-style default: a 3x3 stem, depthwise-separable blocks doubling
// the channel count across three 2x2-pool downsampling stages, global
// average pooling and a single fully-connected head.
ModelSpec reference_spec(int input_h, int input_w, float alpha,
                         std::vector<std::string> class_labels);

// Flattened execution plan; depthwise-separable blocks expand to
// dw -> bn -> relu -> pw -> bn -> relu.
struct PlanStep {
  enum Op {
    Conv,
    Depthwise,
    Pointwise,
    BatchNorm,
    Relu,
    MaxPool,
    AvgPool,
    Flatten,
    FullyConnected,
  };
  Op op;
  std::string name;             // e.g. "l1.dw"
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, out_h = 0, out_w = 0;
  int kernel = 0, stride = 1, padding = 0;
  int window_h = 0, window_w = 0;
  bool has_bias = true;
  int param = -1;  // index into ModelWeights::params, -1 if stateless
};

struct Plan {
  std::vector<PlanStep> steps;
  int logits_dim = 0;
};

// Parameters attached to one plan step.
struct ParamSet {
  Tensor w;                  // conv kernels or fc weights (empty for bn)
  std::vector<float> bias;
  std::vector<float> gamma, beta;               // bn
  std::vector<float> running_mean, running_var; // bn state

  bool operator==(const ParamSet&) const = default;
};

struct ModelWeights {
  uint64_t seed = 0;
  std::vector<ParamSet> params;

  bool operator==(const ModelWeights&) const = default;
};

// Validates shape chaining; throws ConfigError naming the first offending
// layer.
Plan compile(const ModelSpec& spec);

// He-uniform initialization for conv/fc weights, gamma = 1, beta = 0;
// deterministic in the seed.
ModelWeights build_model(const ModelSpec& spec, uint64_t seed);

// Inference forward (batch norm uses running statistics).
Tensor forward(const ModelSpec& spec, const ModelWeights& weights,
               const Tensor& batch);

// Training forward: keeps the activation tape for backward and updates the
// batch-norm running statistics in place.
struct ForwardTape {
  std::vector<Tensor> acts;  // acts[0] = input, acts[i+1] = output of step i
};
ForwardTape forward_train(const ModelSpec& spec, ModelWeights& weights,
                          const Tensor& batch);

// Gradients aligned with ModelWeights::params (running stats unused).
struct GradSet {
  std::vector<ParamSet> params;
};
GradSet backward(const ModelSpec& spec, const ModelWeights& weights,
                 const ForwardTape& tape, const Tensor& logits_grad);

// Applies the configured head to one row of logits.
std::vector<float> apply_head(const ModelSpec& spec,
                              std::span<const float> logits_row);

// Argmax with ties broken toward the lowest index.
int argmax_lowest(std::span<const float> values);

struct Prediction {
  int class_index = 0;
  std::string label;
  std::vector<float> probs;
};
Prediction predict(const ModelSpec& spec, const ModelWeights& weights,
                   const Tensor& image);

struct LayerCost {
  std::string layer;
  long long params = 0;
  long long macs = 0;
};
struct ModelCost {
  std::vector<LayerCost> layers;
  long long total_params = 0;
  long long total_macs = 0;
};

// Parameter and multiply-accumulate counts per spec layer.
ModelCost count_cost(const ModelSpec& spec);
inline ModelCost count_params(const ModelSpec& spec) { return count_cost(spec); }
inline ModelCost count_flops(const ModelSpec& spec) { return count_cost(spec); }

// Canonical config text round-trip. `seed` is written by the weight-file
// writer so a saved model records its init seed.
std::string model_to_config(const ModelSpec& spec);
std::string model_to_config(const ModelSpec& spec, uint64_t seed);
ModelSpec model_from_config(const ConfigDoc& doc);
ModelSpec model_from_config_text(const std::string& text);

}  // namespace vigil
