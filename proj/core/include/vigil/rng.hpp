#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace vigil {

// Deterministic random source. std::mt19937_64 output is pinned by the
// standard; the float and bounded-int mappings below avoid the
// std::*_distribution classes, whose results differ between standard
// library implementations.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n). n must be nonzero.
  uint64_t bounded(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      const uint64_t x = gen_();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform in [lo, hi) with 24 bits of resolution.
  float uniform(float lo, float hi) {
    const float u = static_cast<float>(gen_() >> 40) * (1.0f / 16777216.0f);
    return lo + u * (hi - lo);
  }

  // Uniform in [lo, hi) with 53 bits of resolution.
  double uniform_double(double lo, double hi) {
    const double u =
        static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent seed from two pieces of seed material (SplitMix64).
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace vigil
