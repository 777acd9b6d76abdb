#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rsrwkv/tensor.hpp"

namespace rsrwkv {

// Deterministic RNG. mt19937_64 has a standard-specified sequence, and the
// uniform/normal mappings below avoid the implementation-defined std::
// distributions, so a seed yields the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes exactly two engine draws per sample.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Normal(0, std) resampled into [-2*std, 2*std].
  double trunc_normal(double stddev) {
    double z = normal();
    while (std::abs(z) > 2.0) z = normal();
    return z * stddev;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

 private:
  std::mt19937_64 eng_;
};

template <typename T>
Tensor<T> random_uniform(Rng& rng, std::vector<std::size_t> shape, double lo,
                         double hi) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
Tensor<T> random_normal(Rng& rng, std::vector<std::size_t> shape,
                        double stddev = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
  return t;
}

template <typename T>
void fill_trunc_normal(Rng& rng, Tensor<T>& t, double stddev) {
  for (auto& v : t.data) v = static_cast<T>(rng.trunc_normal(stddev));
}

}  // namespace rsrwkv
