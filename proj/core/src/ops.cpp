#include "vigil/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

namespace vigil {

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace vigil

namespace vigil::ops {

namespace {

int g_threads = 1;

// Runs fn(i) for i in [0, count). Each index is handled by exactly one
// worker, so results do not depend on the schedule.
void parallel_for(int count, const auto& fn) {
  const int workers = std::min(g_threads, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

void check_conv_args(const Tensor& kernels, int stride, int padding,
                     const char* who) {
  const auto& ks = kernels.shape();
  if (ks.h != ks.w)
    throw DimensionError(std::string(who) + ": kernel must be square, got " +
                         std::to_string(ks.h) + "x" + std::to_string(ks.w));
  if (ks.h != 1 && ks.h != 3 && ks.h != 5)
    throw ConfigError(std::string(who) + ": kernel size must be 1, 3 or 5, got " +
                      std::to_string(ks.h));
  if (stride < 1)
    throw ConfigError(std::string(who) + ": stride must be positive, got " +
                      std::to_string(stride));
  if (padding < 0)
    throw ConfigError(std::string(who) + ": padding must be non-negative, got " +
                      std::to_string(padding));
}

void check_bias(std::span<const float> bias, int out_c, const char* who) {
  if (!bias.empty() && static_cast<int>(bias.size()) != out_c)
    throw DimensionError(std::string(who) + ": bias axis has " +
                         std::to_string(bias.size()) + " entries, expected C_out=" +
                         std::to_string(out_c));
}

void check_upstream(const Tensor& upstream, const Shape4& want, const char* who) {
  if (!(upstream.shape() == want))
    throw DimensionError(
        std::string(who) + ": upstream gradient shape (" +
        std::to_string(upstream.n()) + "," + std::to_string(upstream.c()) + "," +
        std::to_string(upstream.h()) + "," + std::to_string(upstream.w()) +
        ") does not match forward output (" + std::to_string(want.n) + "," +
        std::to_string(want.c) + "," + std::to_string(want.h) + "," +
        std::to_string(want.w) + ")");
}

}  // namespace

int out_extent(int in, int window, int stride, int padding, const char* what) {
  const int span = in + 2 * padding - window;
  if (span < 0 || span % stride != 0)
    throw ConfigError(std::string(what) + ": output extent of (" +
                      std::to_string(in) + " + 2*" + std::to_string(padding) +
                      " - " + std::to_string(window) + ")/" +
                      std::to_string(stride) + " + 1 is not a positive integer");
  return span / stride + 1;
}

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      std::span<const float> bias, int stride, int padding) {
  check_conv_args(kernels, stride, padding, "conv2d");
  const auto& xs = input.shape();
  const auto& ks = kernels.shape();
  if (ks.c != xs.c)
    throw DimensionError("conv2d: channel axis mismatch, input C=" +
                         std::to_string(xs.c) + " vs kernel C_in=" +
                         std::to_string(ks.c));
  check_bias(bias, ks.n, "conv2d");

  const int k = ks.h;
  const int oh = out_extent(xs.h, k, stride, padding, "conv2d height");
  const int ow = out_extent(xs.w, k, stride, padding, "conv2d width");
  Tensor out(xs.n, ks.n, oh, ow);

  parallel_for(xs.n * ks.n, [&](int job) {
    const int n = job / ks.n;
    const int oc = job % ks.n;
    const float b = bias.empty() ? 0.0f : bias[oc];
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float acc = b;
        for (int ic = 0; ic < xs.c; ++ic) {
          const float* xplane = input.data() + input.index(n, ic, 0, 0);
          const float* kplane = kernels.data() + kernels.index(oc, ic, 0, 0);
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= xs.h) continue;
            const float* xrow = xplane + static_cast<size_t>(iy) * xs.w;
            const float* krow = kplane + static_cast<size_t>(ky) * k;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= xs.w) continue;
              acc += xrow[ix] * krow[kx];
            }
          }
        }
        out.at(n, oc, oy, ox) = acc;
      }
    }
  });
  return out;
}

Tensor depthwise_conv2d_forward(const Tensor& input, const Tensor& kernels,
                                std::span<const float> bias, int stride,
                                int padding) {
  check_conv_args(kernels, stride, padding, "depthwise_conv2d");
  const auto& xs = input.shape();
  const auto& ks = kernels.shape();
  if (ks.n != xs.c)
    throw DimensionError("depthwise_conv2d: one kernel per input channel required, got " +
                         std::to_string(ks.n) + " kernels for C=" +
                         std::to_string(xs.c));
  if (ks.c != 1)
    throw DimensionError("depthwise_conv2d: kernel C_in axis must be 1, got " +
                         std::to_string(ks.c));
  check_bias(bias, xs.c, "depthwise_conv2d");

  const int k = ks.h;
  const int oh = out_extent(xs.h, k, stride, padding, "depthwise_conv2d height");
  const int ow = out_extent(xs.w, k, stride, padding, "depthwise_conv2d width");
  Tensor out(xs.n, xs.c, oh, ow);

  parallel_for(xs.n * xs.c, [&](int job) {
    const int n = job / xs.c;
    const int c = job % xs.c;
    const float b = bias.empty() ? 0.0f : bias[c];
    const float* xplane = input.data() + input.index(n, c, 0, 0);
    const float* kplane = kernels.data() + kernels.index(c, 0, 0, 0);
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float acc = b;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= xs.h) continue;
          const float* xrow = xplane + static_cast<size_t>(iy) * xs.w;
          const float* krow = kplane + static_cast<size_t>(ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= xs.w) continue;
            acc += xrow[ix] * krow[kx];
          }
        }
        out.at(n, c, oy, ox) = acc;
      }
    }
  });
  return out;
}

Tensor pointwise_conv2d_forward(const Tensor& input, const Tensor& kernels,
                                std::span<const float> bias) {
  const auto& xs = input.shape();
  const auto& ks = kernels.shape();
  if (ks.h != 1 || ks.w != 1)
    throw DimensionError("pointwise_conv2d: kernel must be 1x1, got " +
                         std::to_string(ks.h) + "x" + std::to_string(ks.w));
  if (ks.c != xs.c)
    throw DimensionError("pointwise_conv2d: channel axis mismatch, input C=" +
                         std::to_string(xs.c) + " vs kernel C_in=" +
                         std::to_string(ks.c));
  check_bias(bias, ks.n, "pointwise_conv2d");

  Tensor out(xs.n, ks.n, xs.h, xs.w);
  const int plane = xs.h * xs.w;
  parallel_for(xs.n * ks.n, [&](int job) {
    const int n = job / ks.n;
    const int oc = job % ks.n;
    float* orow = out.data() + out.index(n, oc, 0, 0);
    const float b = bias.empty() ? 0.0f : bias[oc];
    for (int p = 0; p < plane; ++p) orow[p] = b;
    for (int ic = 0; ic < xs.c; ++ic) {
      const float w = kernels.at(oc, ic, 0, 0);
      const float* xrow = input.data() + input.index(n, ic, 0, 0);
      for (int p = 0; p < plane; ++p) orow[p] += xrow[p] * w;
    }
  });
  return out;
}

Tensor batchnorm_forward(const Tensor& input, std::span<const float> gamma,
                         std::span<const float> beta,
                         std::vector<float>& running_mean,
                         std::vector<float>& running_var, float epsilon,
                         bool training, float momentum) {
  const auto& xs = input.shape();
  if (epsilon <= 0.0f)
    throw ConfigError("batchnorm: epsilon must be positive");
  const auto need = [&](size_t got, const char* name) {
    if (static_cast<int>(got) != xs.c)
      throw DimensionError(std::string("batchnorm: ") + name + " axis has " +
                           std::to_string(got) + " entries, expected C=" +
                           std::to_string(xs.c));
  };
  need(gamma.size(), "gamma");
  need(beta.size(), "beta");
  need(running_mean.size(), "running_mean");
  need(running_var.size(), "running_var");

  const long long per_channel = static_cast<long long>(xs.n) * xs.h * xs.w;
  Tensor out(xs.n, xs.c, xs.h, xs.w);

  if (training) {
    if (per_channel < 2)
      throw ConfigError("batchnorm: training mode needs at least 2 values per "
                        "channel, got " + std::to_string(per_channel));
    for (int c = 0; c < xs.c; ++c) {
      double sum = 0.0, sq = 0.0;
      for (int n = 0; n < xs.n; ++n) {
        const float* row = input.data() + input.index(n, c, 0, 0);
        for (int p = 0; p < xs.h * xs.w; ++p) {
          sum += row[p];
          sq += static_cast<double>(row[p]) * row[p];
        }
      }
      const double mean = sum / static_cast<double>(per_channel);
      const double var = sq / static_cast<double>(per_channel) - mean * mean;
      const double inv = 1.0 / std::sqrt(var + epsilon);
      for (int n = 0; n < xs.n; ++n) {
        const float* row = input.data() + input.index(n, c, 0, 0);
        float* orow = out.data() + out.index(n, c, 0, 0);
        for (int p = 0; p < xs.h * xs.w; ++p)
          orow[p] = static_cast<float>((row[p] - mean) * inv) * gamma[c] + beta[c];
      }
      running_mean[c] = (1.0f - momentum) * running_mean[c] +
                        momentum * static_cast<float>(mean);
      running_var[c] = (1.0f - momentum) * running_var[c] +
                       momentum * static_cast<float>(var);
    }
  } else {
    for (int c = 0; c < xs.c; ++c) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + epsilon);
      const double mean = running_mean[c];
      for (int n = 0; n < xs.n; ++n) {
        const float* row = input.data() + input.index(n, c, 0, 0);
        float* orow = out.data() + out.index(n, c, 0, 0);
        for (int p = 0; p < xs.h * xs.w; ++p)
          orow[p] = static_cast<float>((row[p] - mean) * inv) * gamma[c] + beta[c];
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.raw()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor pool2d(const Tensor& input, PoolMode mode, int window, int stride) {
  return pool2d(input, mode, window, window, stride, stride);
}

Tensor pool2d(const Tensor& input, PoolMode mode, int window_h, int window_w,
              int stride_h, int stride_w) {
  const auto& xs = input.shape();
  if (window_h < 1 || window_w < 1)
    throw ConfigError("pool2d: window must be positive");
  if (stride_h < 1 || stride_w < 1)
    throw ConfigError("pool2d: stride must be positive");
  const int oh = out_extent(xs.h, window_h, stride_h, 0, "pool2d height");
  const int ow = out_extent(xs.w, window_w, stride_w, 0, "pool2d width");
  Tensor out(xs.n, xs.c, oh, ow);
  const float inv_area = 1.0f / static_cast<float>(window_h * window_w);

  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const int iy0 = oy * stride_h;
          const int ix0 = ox * stride_w;
          if (mode == PoolMode::Max) {
            float best = input.at(n, c, iy0, ix0);
            for (int ky = 0; ky < window_h; ++ky)
              for (int kx = 0; kx < window_w; ++kx) {
                const float v = input.at(n, c, iy0 + ky, ix0 + kx);
                if (v > best) best = v;
              }
            out.at(n, c, oy, ox) = best;
          } else {
            float acc = 0.0f;
            for (int ky = 0; ky < window_h; ++ky)
              for (int kx = 0; kx < window_w; ++kx)
                acc += input.at(n, c, iy0 + ky, ix0 + kx);
            out.at(n, c, oy, ox) = acc * inv_area;
          }
        }
      }
    }
  }
  return out;
}

Tensor fully_connected_forward(const Tensor& input, const Tensor& weights,
                               std::span<const float> bias) {
  const auto& xs = input.shape();
  const auto& ws = weights.shape();
  if (xs.h != 1 || xs.w != 1)
    throw DimensionError("fully_connected: input must be flattened to N x D, got "
                         "spatial " + std::to_string(xs.h) + "x" +
                         std::to_string(xs.w));
  if (ws.h != 1 || ws.w != 1)
    throw DimensionError("fully_connected: weights must be M x D");
  if (ws.c != xs.c)
    throw DimensionError("fully_connected: feature axis mismatch, input D=" +
                         std::to_string(xs.c) + " vs weight D=" +
                         std::to_string(ws.c));
  check_bias(bias, ws.n, "fully_connected");

  Tensor out(xs.n, ws.n, 1, 1);
  for (int n = 0; n < xs.n; ++n) {
    const float* x = input.data() + input.index(n, 0, 0, 0);
    for (int m = 0; m < ws.n; ++m) {
      const float* w = weights.data() + weights.index(m, 0, 0, 0);
      float acc = bias.empty() ? 0.0f : bias[m];
      for (int d = 0; d < xs.c; ++d) acc += w[d] * x[d];
      out.at(n, m, 0, 0) = acc;
    }
  }
  return out;
}

std::vector<float> softmax(std::span<const float> logits) {
  if (logits.empty()) throw DimensionError("softmax: empty logits");
  float top = logits[0];
  for (float v : logits) top = std::max(top, v);
  std::vector<float> out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  const float inv = static_cast<float>(1.0 / sum);
  for (float& v : out) v *= inv;
  return out;
}

float sigmoid(float logit) {
  if (logit >= 0.0f) return 1.0f / (1.0f + std::exp(-logit));
  const float e = std::exp(logit);
  return e / (1.0f + e);
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                          int stride, int padding, const Tensor& upstream) {
  check_conv_args(kernels, stride, padding, "conv2d_backward");
  const auto& xs = input.shape();
  const auto& ks = kernels.shape();
  const int k = ks.h;
  const int oh = out_extent(xs.h, k, stride, padding, "conv2d height");
  const int ow = out_extent(xs.w, k, stride, padding, "conv2d width");
  check_upstream(upstream, {xs.n, ks.n, oh, ow}, "conv2d_backward");

  ConvGrads g;
  g.input_grad = Tensor(xs.n, xs.c, xs.h, xs.w);
  g.kernel_grad = Tensor(ks.n, ks.c, k, k);
  g.bias_grad.assign(ks.n, 0.0f);

  for (int n = 0; n < xs.n; ++n) {
    for (int oc = 0; oc < ks.n; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const float up = upstream.at(n, oc, oy, ox);
          g.bias_grad[oc] += up;
          for (int ic = 0; ic < xs.c; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= xs.h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= xs.w) continue;
                g.kernel_grad.at(oc, ic, ky, kx) += up * input.at(n, ic, iy, ix);
                g.input_grad.at(n, ic, iy, ix) += up * kernels.at(oc, ic, ky, kx);
              }
            }
          }
        }
      }
    }
  }
  return g;
}

ConvGrads depthwise_conv2d_backward(const Tensor& input, const Tensor& kernels,
                                    int stride, int padding,
                                    const Tensor& upstream) {
  check_conv_args(kernels, stride, padding, "depthwise_conv2d_backward");
  const auto& xs = input.shape();
  const auto& ks = kernels.shape();
  if (ks.n != xs.c || ks.c != 1)
    throw DimensionError("depthwise_conv2d_backward: kernel axes must be C x 1 x k x k");
  const int k = ks.h;
  const int oh = out_extent(xs.h, k, stride, padding, "depthwise_conv2d height");
  const int ow = out_extent(xs.w, k, stride, padding, "depthwise_conv2d width");
  check_upstream(upstream, {xs.n, xs.c, oh, ow}, "depthwise_conv2d_backward");

  ConvGrads g;
  g.input_grad = Tensor(xs.n, xs.c, xs.h, xs.w);
  g.kernel_grad = Tensor(ks.n, 1, k, k);
  g.bias_grad.assign(xs.c, 0.0f);

  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const float up = upstream.at(n, c, oy, ox);
          g.bias_grad[c] += up;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= xs.w) continue;
              g.kernel_grad.at(c, 0, ky, kx) += up * input.at(n, c, iy, ix);
              g.input_grad.at(n, c, iy, ix) += up * kernels.at(c, 0, ky, kx);
            }
          }
        }
      }
    }
  }
  return g;
}

BatchNormGrads batchnorm_backward(const Tensor& input,
                                  std::span<const float> gamma, float epsilon,
                                  const Tensor& upstream) {
  const auto& xs = input.shape();
  check_upstream(upstream, xs, "batchnorm_backward");
  if (static_cast<int>(gamma.size()) != xs.c)
    throw DimensionError("batchnorm_backward: gamma axis has " +
                         std::to_string(gamma.size()) + " entries, expected C=" +
                         std::to_string(xs.c));

  const long long m = static_cast<long long>(xs.n) * xs.h * xs.w;
  BatchNormGrads g;
  g.input_grad = Tensor(xs.n, xs.c, xs.h, xs.w);
  g.gamma_grad.assign(xs.c, 0.0f);
  g.beta_grad.assign(xs.c, 0.0f);

  const int plane = xs.h * xs.w;
  for (int c = 0; c < xs.c; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int n = 0; n < xs.n; ++n) {
      const float* row = input.data() + input.index(n, c, 0, 0);
      for (int p = 0; p < plane; ++p) {
        sum += row[p];
        sq += static_cast<double>(row[p]) * row[p];
      }
    }
    const double mean = sum / static_cast<double>(m);
    const double var = sq / static_cast<double>(m) - mean * mean;
    const double inv = 1.0 / std::sqrt(var + epsilon);

    // dx = gamma * inv * (dy - mean(dy) - xhat * mean(dy * xhat))
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < xs.n; ++n) {
      const float* xrow = input.data() + input.index(n, c, 0, 0);
      const float* urow = upstream.data() + upstream.index(n, c, 0, 0);
      for (int p = 0; p < plane; ++p) {
        const double xhat = (xrow[p] - mean) * inv;
        sum_dy += urow[p];
        sum_dy_xhat += urow[p] * xhat;
      }
    }
    g.beta_grad[c] = static_cast<float>(sum_dy);
    g.gamma_grad[c] = static_cast<float>(sum_dy_xhat);

    const double mean_dy = sum_dy / static_cast<double>(m);
    const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(m);
    for (int n = 0; n < xs.n; ++n) {
      const float* xrow = input.data() + input.index(n, c, 0, 0);
      const float* urow = upstream.data() + upstream.index(n, c, 0, 0);
      float* grow = g.input_grad.data() + g.input_grad.index(n, c, 0, 0);
      for (int p = 0; p < plane; ++p) {
        const double xhat = (xrow[p] - mean) * inv;
        grow[p] = static_cast<float>(gamma[c] * inv *
                                     (urow[p] - mean_dy - xhat * mean_dy_xhat));
      }
    }
  }
  return g;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  check_upstream(upstream, input.shape(), "relu_backward");
  Tensor g(input.n(), input.c(), input.h(), input.w());
  const float* x = input.data();
  const float* u = upstream.data();
  float* out = g.data();
  for (size_t i = 0; i < input.size(); ++i) out[i] = x[i] > 0.0f ? u[i] : 0.0f;
  return g;
}

Tensor pool2d_backward(const Tensor& input, PoolMode mode, int window_h,
                       int window_w, int stride_h, int stride_w,
                       const Tensor& upstream) {
  const auto& xs = input.shape();
  const int oh = out_extent(xs.h, window_h, stride_h, 0, "pool2d height");
  const int ow = out_extent(xs.w, window_w, stride_w, 0, "pool2d width");
  check_upstream(upstream, {xs.n, xs.c, oh, ow}, "pool2d_backward");

  Tensor g(xs.n, xs.c, xs.h, xs.w);
  const float inv_area = 1.0f / static_cast<float>(window_h * window_w);

  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const float up = upstream.at(n, c, oy, ox);
          const int iy0 = oy * stride_h;
          const int ix0 = ox * stride_w;
          if (mode == PoolMode::Max) {
            // First occurrence of the max (scan order) takes the gradient.
            int by = 0, bx = 0;
            float best = input.at(n, c, iy0, ix0);
            for (int ky = 0; ky < window_h; ++ky)
              for (int kx = 0; kx < window_w; ++kx) {
                const float v = input.at(n, c, iy0 + ky, ix0 + kx);
                if (v > best) {
                  best = v;
                  by = ky;
                  bx = kx;
                }
              }
            g.at(n, c, iy0 + by, ix0 + bx) += up;
          } else {
            for (int ky = 0; ky < window_h; ++ky)
              for (int kx = 0; kx < window_w; ++kx)
                g.at(n, c, iy0 + ky, ix0 + kx) += up * inv_area;
          }
        }
      }
    }
  }
  return g;
}

FcGrads fully_connected_backward(const Tensor& input, const Tensor& weights,
                                 const Tensor& upstream) {
  const auto& xs = input.shape();
  const auto& ws = weights.shape();
  check_upstream(upstream, {xs.n, ws.n, 1, 1}, "fully_connected_backward");

  FcGrads g;
  g.input_grad = Tensor(xs.n, xs.c, 1, 1);
  g.weight_grad = Tensor(ws.n, ws.c, 1, 1);
  g.bias_grad.assign(ws.n, 0.0f);

  for (int n = 0; n < xs.n; ++n) {
    const float* x = input.data() + input.index(n, 0, 0, 0);
    float* gx = g.input_grad.data() + g.input_grad.index(n, 0, 0, 0);
    for (int m = 0; m < ws.n; ++m) {
      const float up = upstream.at(n, m, 0, 0);
      g.bias_grad[m] += up;
      const float* w = weights.data() + weights.index(m, 0, 0, 0);
      float* gw = g.weight_grad.data() + g.weight_grad.index(m, 0, 0, 0);
      for (int d = 0; d < xs.c; ++d) {
        gw[d] += up * x[d];
        gx[d] += up * w[d];
      }
    }
  }
  return g;
}

std::vector<float> softmax_ce_grad(std::span<const float> probs, int target) {
  if (target < 0 || target >= static_cast<int>(probs.size()))
    throw RangeError("softmax_ce_grad: target " + std::to_string(target) +
                     " outside [0, " + std::to_string(probs.size()) + ")");
  std::vector<float> g(probs.begin(), probs.end());
  g[static_cast<size_t>(target)] -= 1.0f;
  return g;
}

}  // namespace vigil::ops
