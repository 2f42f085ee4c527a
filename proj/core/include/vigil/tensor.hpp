#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;
  bool operator==(const Shape4&) const = default;
  long long count() const {
    return static_cast<long long>(n) * c * h * w;
  }
};

// Dense rank-4 tensor of f32, row-major in (N, C, H, W) order.
class Tensor {
public:
  Tensor() = default;

  Tensor(int n, int c, int h, int w) : shape_{n, c, h, w} {
    check_shape(shape_);
    data_.assign(static_cast<size_t>(shape_.count()), 0.0f);
  }

  static Tensor filled(int n, int c, int h, int w, float value) {
    Tensor t(n, c, h, w);
    for (float& v : t.data_) v = value;
    return t;
  }

  static Tensor from(int n, int c, int h, int w, std::vector<float> data) {
    Tensor t;
    t.shape_ = {n, c, h, w};
    check_shape(t.shape_);
    if (static_cast<long long>(data.size()) != t.shape_.count())
      throw DimensionError("tensor: data length " + std::to_string(data.size()) +
                           " does not match shape count " +
                           std::to_string(t.shape_.count()));
    t.data_ = std::move(data);
    return t;
  }

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& raw() { return data_; }
  const std::vector<float>& raw() const { return data_; }

  float& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  size_t index(int n, int c, int h, int w) const {
    return ((static_cast<size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

private:
  static void check_shape(const Shape4& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      throw DimensionError("tensor: negative extent in shape");
  }

  Shape4 shape_{};
  std::vector<float> data_;
};

}  // namespace vigil
