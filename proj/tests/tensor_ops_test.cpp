#include <doctest.h>

#include <array>
#include <cmath>

#include "support/test_helpers.hpp"
#include "vigil/ops.hpp"

using namespace vigil;
using namespace vigil::test;

namespace {
std::vector<float> no_bias;
}

TEST_CASE("conv2d: all-ones 3x3 kernel computes the window sum") {
  const Tensor x = Tensor::from(1, 1, 3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor k = Tensor::filled(1, 1, 3, 3, 1.0f);
  const Tensor y = ops::conv2d_forward(x, k, no_bias, 1, 0);
  CHECK(y.shape() == Shape4{1, 1, 1, 1});
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(45.0f));
}

TEST_CASE("conv2d: identity 1x1 kernel preserves the input") {
  Rng rng(11);
  const Tensor x = rand_tensor(rng, 2, 1, 4, 5);
  const Tensor k = Tensor::filled(1, 1, 1, 1, 1.0f);
  const Tensor y = ops::conv2d_forward(x, k, no_bias, 1, 0);
  CHECK(y == x);
}

TEST_CASE("conv2d: matches the nested-loop oracle with padding") {
  Rng rng(17);
  const Tensor x = rand_tensor(rng, 1, 2, 4, 4);
  const Tensor k = rand_tensor(rng, 3, 2, 3, 3);
  const Tensor y = ops::conv2d_forward(x, k, no_bias, 1, 1);
  const std::vector<float> want =
      conv_oracle(x.raw(), 1, 2, 4, 4, k.raw(), 3, 3, 1, 1);
  REQUIRE(y.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i)
    CHECK(std::fabs(y.raw()[i] - want[i]) < 1e-5f);
}

TEST_CASE("conv2d: oracle agreement across random shapes and strides") {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = std::array{1, 3, 5}[rng.bounded(3)];
    const int h = k + static_cast<int>(rng.bounded(4));
    const int w = k + static_cast<int>(rng.bounded(4));
    const int ci = 1 + static_cast<int>(rng.bounded(3));
    const int co = 1 + static_cast<int>(rng.bounded(3));
    const int pad = static_cast<int>(rng.bounded(2));
    // pick a stride that divides the span evenly
    int stride = 1 + static_cast<int>(rng.bounded(2));
    if ((h + 2 * pad - k) % stride != 0 || (w + 2 * pad - k) % stride != 0)
      stride = 1;
    const Tensor x = rand_tensor(rng, 1, ci, h, w);
    const Tensor kern = rand_tensor(rng, co, ci, k, k);
    const Tensor y = ops::conv2d_forward(x, kern, no_bias, stride, pad);
    const std::vector<float> want =
        conv_oracle(x.raw(), 1, ci, h, w, kern.raw(), co, k, stride, pad);
    REQUIRE(y.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i)
      CHECK(std::fabs(y.raw()[i] - want[i]) < 1e-5f);
  }
}

TEST_CASE("conv2d: shape errors name the offending axis") {
  const Tensor x(1, 2, 4, 4);
  const Tensor k(1, 3, 3, 3);  // C_in mismatch
  CHECK_THROWS_WITH_AS(ops::conv2d_forward(x, k, no_bias, 1, 0),
                       doctest::Contains("channel axis"), DimensionError);
  const Tensor k4(1, 2, 4, 4);  // kernel size not in {1,3,5}
  CHECK_THROWS_AS(ops::conv2d_forward(x, k4, no_bias, 1, 0), ConfigError);
  const Tensor k3(1, 2, 3, 3);  // (4 - 3) % 2 != 0
  CHECK_THROWS_AS(ops::conv2d_forward(x, k3, no_bias, 2, 0), ConfigError);
}

TEST_CASE("depthwise: centered identity kernel with same-padding") {
  Rng rng(29);
  const Tensor x = rand_tensor(rng, 1, 3, 5, 5);
  Tensor k(3, 1, 3, 3);
  for (int c = 0; c < 3; ++c) k.at(c, 0, 1, 1) = 1.0f;
  const Tensor y = ops::depthwise_conv2d_forward(x, k, no_bias, 1, 1);
  CHECK(y == x);
}

TEST_CASE("depthwise: per-channel window sums stay independent") {
  const Tensor x = Tensor::from(
      1, 2, 3, 3, {1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2});
  const Tensor k = Tensor::filled(2, 1, 3, 3, 1.0f);
  const Tensor y = ops::depthwise_conv2d_forward(x, k, no_bias, 1, 0);
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(9.0f));
  CHECK(y.at(0, 1, 0, 0) == doctest::Approx(18.0f));
}

TEST_CASE("depthwise: zeroing one channel only changes that output channel") {
  Rng rng(31);
  const Tensor x = rand_tensor(rng, 1, 3, 4, 4);
  const Tensor k = rand_tensor(rng, 3, 1, 3, 3);
  std::vector<float> bias = {0.25f, -0.5f, 0.75f};
  const Tensor full = ops::depthwise_conv2d_forward(x, k, bias, 1, 1);

  Tensor x2 = x;
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) x2.at(0, 1, y, xx) = 0.0f;
  const Tensor part = ops::depthwise_conv2d_forward(x2, k, bias, 1, 1);

  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) {
      CHECK(part.at(0, 1, y, xx) == doctest::Approx(bias[1]));
      CHECK(part.at(0, 0, y, xx) == full.at(0, 0, y, xx));
      CHECK(part.at(0, 2, y, xx) == full.at(0, 2, y, xx));
    }
}

TEST_CASE("depthwise: kernel count must match channels") {
  const Tensor x(1, 3, 4, 4);
  const Tensor k(2, 1, 3, 3);
  CHECK_THROWS_AS(ops::depthwise_conv2d_forward(x, k, no_bias, 1, 1),
                  DimensionError);
}

TEST_CASE("pointwise: identity matrix kernels preserve the input") {
  Rng rng(37);
  const Tensor x = rand_tensor(rng, 1, 3, 3, 3);
  Tensor k(3, 3, 1, 1);
  for (int c = 0; c < 3; ++c) k.at(c, c, 0, 0) = 1.0f;
  CHECK(ops::pointwise_conv2d_forward(x, k, no_bias) == x);
}

TEST_CASE("pointwise: [a, b] with weights [1, 1] sums the channels") {
  const Tensor x = Tensor::from(1, 2, 1, 1, {3.0f, 4.5f});
  const Tensor k = Tensor::filled(1, 2, 1, 1, 1.0f);
  const Tensor y = ops::pointwise_conv2d_forward(x, k, no_bias);
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(7.5f));
}

TEST_CASE("pointwise: bitwise equal to conv2d with the same 1x1 kernels") {
  Rng rng(41);
  const Tensor x = rand_tensor(rng, 2, 4, 5, 5);
  const Tensor k = rand_tensor(rng, 3, 4, 1, 1);
  std::vector<float> bias = {0.1f, -0.2f, 0.3f};
  const Tensor a = ops::pointwise_conv2d_forward(x, k, bias);
  const Tensor b = ops::conv2d_forward(x, k, bias, 1, 0);
  CHECK(a == b);
}

TEST_CASE("depthwise then pointwise equals the composed standard conv") {
  Rng rng(43);
  const int ci = 3, co = 4, k = 3;
  const Tensor x = rand_tensor(rng, 1, ci, 6, 6);
  const Tensor dw = rand_tensor(rng, ci, 1, k, k);
  const Tensor pw = rand_tensor(rng, co, ci, 1, 1);

  const Tensor via_block = ops::pointwise_conv2d_forward(
      ops::depthwise_conv2d_forward(x, dw, no_bias, 1, 1), pw, no_bias);

  Tensor composed(co, ci, k, k);
  for (int oc = 0; oc < co; ++oc)
    for (int ic = 0; ic < ci; ++ic)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx)
          composed.at(oc, ic, ky, kx) = pw.at(oc, ic, 0, 0) * dw.at(ic, 0, ky, kx);
  const Tensor via_std = ops::conv2d_forward(x, composed, no_bias, 1, 1);

  REQUIRE(via_block.shape() == via_std.shape());
  for (size_t i = 0; i < via_block.size(); ++i)
    CHECK(std::fabs(via_block.raw()[i] - via_std.raw()[i]) < 1e-4f);
}

TEST_CASE("batchnorm: channel values {1, 3} normalize to about -1 and +1") {
  const Tensor x = Tensor::from(2, 1, 1, 1, {1.0f, 3.0f});
  std::vector<float> gamma = {1.0f}, beta = {0.0f};
  std::vector<float> rm = {0.0f}, rv = {1.0f};
  const Tensor y = ops::batchnorm_forward(x, gamma, beta, rm, rv, 1e-5f, true);
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(-1.0f).epsilon(1e-3));
  CHECK(y.at(1, 0, 0, 0) == doctest::Approx(1.0f).epsilon(1e-3));
  // running stats moved toward the batch statistics (momentum 0.1)
  CHECK(rm[0] == doctest::Approx(0.2f));
  CHECK(rv[0] == doctest::Approx(1.0f * 0.9f + 0.1f * 1.0f));
}

TEST_CASE("batchnorm: gamma 0 collapses the output to beta") {
  Rng rng(47);
  const Tensor x = rand_tensor(rng, 2, 2, 3, 3);
  std::vector<float> gamma = {0.0f, 0.0f}, beta = {0.7f, -0.3f};
  std::vector<float> rm = {0.0f, 0.0f}, rv = {1.0f, 1.0f};
  const Tensor y = ops::batchnorm_forward(x, gamma, beta, rm, rv, 1e-5f, true);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          CHECK(y.at(n, c, i, j) == doctest::Approx(beta[static_cast<size_t>(c)]));
}

TEST_CASE("batchnorm: inference with identity statistics is a near no-op") {
  Rng rng(53);
  const Tensor x = rand_tensor(rng, 1, 2, 4, 4);
  std::vector<float> gamma = {1.0f, 1.0f}, beta = {0.0f, 0.0f};
  std::vector<float> rm = {0.0f, 0.0f}, rv = {1.0f, 1.0f};
  const Tensor y = ops::batchnorm_forward(x, gamma, beta, rm, rv, 1e-5f, false);
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(y.raw()[i] == doctest::Approx(x.raw()[i]).epsilon(1e-4));
}

TEST_CASE("batchnorm: degenerate batches are rejected in training mode") {
  const Tensor x(1, 1, 1, 1);
  std::vector<float> one = {1.0f}, zero = {0.0f};
  std::vector<float> rm = {0.0f}, rv = {1.0f};
  CHECK_THROWS_AS(ops::batchnorm_forward(x, one, zero, rm, rv, 1e-5f, true),
                  ConfigError);
  CHECK_THROWS_AS(ops::batchnorm_forward(x, one, zero, rm, rv, 0.0f, false),
                  ConfigError);
}

TEST_CASE("relu basics") {
  const Tensor x = Tensor::from(1, 1, 1, 3, {-1.0f, 0.0f, 2.0f});
  const Tensor y = ops::relu(x);
  CHECK(y.raw() == std::vector<float>{0.0f, 0.0f, 2.0f});

  Rng rng(59);
  Tensor pos = rand_tensor(rng, 1, 2, 3, 3, 0.0f, 5.0f);
  CHECK(ops::relu(pos) == pos);

  Tensor any = rand_tensor(rng, 1, 2, 3, 3);
  CHECK(ops::relu(ops::relu(any)) == ops::relu(any));
}

TEST_CASE("pool2d: 2x2 fixtures") {
  const Tensor x = Tensor::from(1, 1, 2, 2, {1, 2, 3, 4});
  CHECK(ops::pool2d(x, ops::PoolMode::Max, 2, 2).at(0, 0, 0, 0) == 4.0f);
  CHECK(ops::pool2d(x, ops::PoolMode::Average, 2, 2).at(0, 0, 0, 0) ==
        doctest::Approx(2.5f));

  const Tensor c = Tensor::filled(1, 2, 4, 4, 3.25f);
  CHECK(ops::pool2d(c, ops::PoolMode::Max, 2, 2) == Tensor::filled(1, 2, 2, 2, 3.25f));
  const Tensor avg = ops::pool2d(c, ops::PoolMode::Average, 2, 2);
  for (float v : avg.raw()) CHECK(v == doctest::Approx(3.25f));

  CHECK_THROWS_AS(ops::pool2d(Tensor(1, 1, 5, 5), ops::PoolMode::Max, 2, 2),
                  ConfigError);
}

TEST_CASE("fully connected fixtures") {
  // identity weights
  const Tensor x = Tensor::from(1, 2, 1, 1, {4.0f, -2.0f});
  Tensor eye(2, 2, 1, 1);
  eye.at(0, 0, 0, 0) = eye.at(1, 1, 0, 0) = 1.0f;
  CHECK(ops::fully_connected_forward(x, eye, no_bias) == x);

  // x = [1,2], W = [[3,4]], b = [5] -> 16
  const Tensor x2 = Tensor::from(1, 2, 1, 1, {1.0f, 2.0f});
  const Tensor w = Tensor::from(1, 2, 1, 1, {3.0f, 4.0f});
  std::vector<float> b = {5.0f};
  CHECK(ops::fully_connected_forward(x2, w, b).at(0, 0, 0, 0) ==
        doctest::Approx(16.0f));

  // zero input passes the bias through
  const Tensor zero(1, 2, 1, 1);
  const Tensor yb = ops::fully_connected_forward(zero, w, b);
  CHECK(yb.at(0, 0, 0, 0) == doctest::Approx(5.0f));
}

TEST_CASE("softmax fixtures and properties") {
  const std::vector<float> flat = {0.0f, 0.0f, 0.0f};
  for (float p : ops::softmax(flat)) CHECK(p == doctest::Approx(1.0f / 3.0f));

  const std::vector<float> two = {std::log(2.0f), 0.0f};
  const std::vector<float> q = ops::softmax(two);
  CHECK(q[0] == doctest::Approx(2.0f / 3.0f));
  CHECK(q[1] == doctest::Approx(1.0f / 3.0f));

  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<float> logits(1 + rng.bounded(7));
    for (float& v : logits) v = rng.uniform(-30.0f, 30.0f);
    const std::vector<float> p = ops::softmax(logits);
    double sum = 0.0;
    for (float v : p) {
      CHECK(v > 0.0f);
      CHECK(v <= 1.0f);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-6);

    // shift invariance and argmax preservation
    std::vector<float> shifted = logits;
    const float c = rng.uniform(-5.0f, 5.0f);
    for (float& v : shifted) v += c;
    const std::vector<float> p2 = ops::softmax(shifted);
    for (size_t i = 0; i < p.size(); ++i)
      CHECK(p2[i] == doctest::Approx(p[i]).epsilon(1e-4));
    size_t arg_logit = 0, arg_prob = 0;
    for (size_t i = 1; i < p.size(); ++i) {
      if (logits[i] > logits[arg_logit]) arg_logit = i;
      if (p[i] > p[arg_prob]) arg_prob = i;
    }
    CHECK(arg_logit == arg_prob);
  }
}

TEST_CASE("sigmoid fixtures") {
  CHECK(ops::sigmoid(0.0f) == doctest::Approx(0.5f));
  CHECK(ops::sigmoid(4.0f) == doctest::Approx(0.9820f).epsilon(1e-4));
  Rng rng(67);
  for (int i = 0; i < 20; ++i) {
    const float x = rng.uniform(-20.0f, 20.0f);
    CHECK(ops::sigmoid(-x) == doctest::Approx(1.0f - ops::sigmoid(x)).epsilon(1e-5));
  }
}

TEST_CASE("output extents follow the closed-form formula exactly") {
  Rng rng(71);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = std::array{1, 3, 5}[rng.bounded(3)];
    const int stride = 1 + static_cast<int>(rng.bounded(3));
    const int pad = static_cast<int>(rng.bounded(3));
    const int steps = 1 + static_cast<int>(rng.bounded(5));
    const int h = k + stride * (steps - 1) - 2 * pad;
    if (h < 1) continue;
    const int ci = 1 + static_cast<int>(rng.bounded(2));
    const Tensor x(1, ci, h, std::max(h, k));
    const Tensor kern(2, ci, k, k);
    if ((x.w() + 2 * pad - k) % stride != 0) continue;
    const Tensor y = ops::conv2d_forward(x, kern, no_bias, stride, pad);
    CHECK(y.h() == (h + 2 * pad - k) / stride + 1);
    CHECK(y.w() == (x.w() + 2 * pad - k) / stride + 1);
  }
}

TEST_CASE("layer forwards keep finite inputs finite") {
  Rng rng(73);
  const Tensor x = rand_tensor(rng, 2, 3, 6, 6, -10.0f, 10.0f);
  const Tensor k = rand_tensor(rng, 4, 3, 3, 3, -5.0f, 5.0f);
  CHECK(ops::conv2d_forward(x, k, no_bias, 1, 1).all_finite());
  CHECK(ops::relu(x).all_finite());
  CHECK(ops::pool2d(x, ops::PoolMode::Max, 2, 2).all_finite());
  CHECK(ops::pool2d(x, ops::PoolMode::Average, 2, 2).all_finite());
}
