#pragma once

#include <span>
#include <vector>

#include "vigil/tensor.hpp"

namespace vigil::ops {

enum class PoolMode { Max, Average };

// Output extent of a convolution or pooling window along one axis.
// Throws ConfigError when the extent is not a positive integer.
int out_extent(int in, int window, int stride, int padding, const char* what);

// Worker count used by the forward convolutions. 1 = sequential.
// Results are bitwise independent of the thread count.
void set_num_threads(int n);
int num_threads();

// Standard cross-correlation. kernels is C_out x C_in x k x k with
// k in {1,3,5}; bias may be empty (no bias) or C_out long.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      std::span<const float> bias, int stride, int padding);

// One k x k kernel per input channel (kernels: C x 1 x k x k); channel c of
// the output depends only on channel c of the input.
Tensor depthwise_conv2d_forward(const Tensor& input, const Tensor& kernels,
                                std::span<const float> bias, int stride,
                                int padding);

// 1x1 convolution, stride 1, no padding: a per-pixel linear map across
// channels. Matches conv2d_forward bitwise for the same kernels.
Tensor pointwise_conv2d_forward(const Tensor& input, const Tensor& kernels,
                                std::span<const float> bias);

// In training mode normalizes by batch statistics over (N,H,W) per channel
// and updates the running stats by exponential moving average; in inference
// mode normalizes by the running stats.
Tensor batchnorm_forward(const Tensor& input, std::span<const float> gamma,
                         std::span<const float> beta,
                         std::vector<float>& running_mean,
                         std::vector<float>& running_var, float epsilon,
                         bool training, float momentum = 0.1f);

Tensor relu(const Tensor& input);

Tensor pool2d(const Tensor& input, PoolMode mode, int window, int stride);
Tensor pool2d(const Tensor& input, PoolMode mode, int window_h, int window_w,
              int stride_h, int stride_w);

// input is a flattened tensor N x D (h = w = 1); weights M x D (h = w = 1).
Tensor fully_connected_forward(const Tensor& input, const Tensor& weights,
                               std::span<const float> bias);

// Max-subtracted softmax; probabilities sum to 1 within 1e-6.
std::vector<float> softmax(std::span<const float> logits);

float sigmoid(float logit);

struct ConvGrads {
  Tensor input_grad;
  Tensor kernel_grad;
  std::vector<float> bias_grad;
};

struct BatchNormGrads {
  Tensor input_grad;
  std::vector<float> gamma_grad;
  std::vector<float> beta_grad;
};

struct FcGrads {
  Tensor input_grad;
  Tensor weight_grad;
  std::vector<float> bias_grad;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                          int stride, int padding, const Tensor& upstream);

ConvGrads depthwise_conv2d_backward(const Tensor& input, const Tensor& kernels,
                                    int stride, int padding,
                                    const Tensor& upstream);

// Training-mode batch-norm backward; batch statistics are recomputed from
// the saved forward input.
BatchNormGrads batchnorm_backward(const Tensor& input,
                                  std::span<const float> gamma, float epsilon,
                                  const Tensor& upstream);

Tensor relu_backward(const Tensor& input, const Tensor& upstream);

Tensor pool2d_backward(const Tensor& input, PoolMode mode, int window_h,
                       int window_w, int stride_h, int stride_w,
                       const Tensor& upstream);

FcGrads fully_connected_backward(const Tensor& input, const Tensor& weights,
                                 const Tensor& upstream);

// Fused softmax + cross-entropy gradient with respect to the logits:
// probs - onehot(target).
std::vector<float> softmax_ce_grad(std::span<const float> probs, int target);

}  // namespace vigil::ops
