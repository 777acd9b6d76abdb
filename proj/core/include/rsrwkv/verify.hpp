#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rsrwkv/tensor.hpp"
#include "rsrwkv/wkv.hpp"

// Verification suites behind the `verify` CLI subcommand. Each suite is a
// list of named property checks against independent reference
// implementations; the oracles here are deliberately written as plain nested
// loops, separate from the kernels they check.
namespace rsrwkv::verify {

struct Row {
  std::string suite;
  std::string name;
  std::size_t count = 0;   // instances exercised
  double max_err = 0.0;    // worst relative error observed
  bool pass = false;
};

// suite: kernel | scan | shift | model | all. Unknown names raise UsageError.
std::vector<Row> run_suite(const std::string& suite, std::uint64_t seed);

std::string rows_csv(const std::vector<Row>& rows);
bool all_pass(const std::vector<Row>& rows);

// Relative error with unit floor: |a-b| / max(1, |a|, |b|).
inline double rel_err(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

template <typename T>
double max_rel_err(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.same_shape(b), "max_rel_err: shape mismatch");
  double worst = 0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, rel_err(static_cast<double>(a.data[i]),
                                    static_cast<double>(b.data[i])));
  return worst;
}

// Central finite differences of a scalar-valued function against an
// analytic gradient for one parameter tensor. `eval` re-runs the full
// forward pass at the current parameter values.
template <typename T>
double fd_check(Tensor<T>& param, const Tensor<T>& analytic,
                const std::function<double()>& eval, double h) {
  check_shape(analytic.same_shape(param), "fd_check: gradient shape mismatch");
  double worst = 0;
  for (std::size_t i = 0; i < param.numel(); ++i) {
    const T keep = param.data[i];
    param.data[i] = keep + static_cast<T>(h);
    const double fp = eval();
    param.data[i] = keep - static_cast<T>(h);
    const double fm = eval();
    param.data[i] = keep;
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, rel_err(static_cast<double>(analytic.data[i]), fd));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Reference implementations (independent of the ops:: / wkv:: kernels)
// ---------------------------------------------------------------------------

namespace oracle {

// Triple-loop matrix multiply, output-element major.
template <typename T>
Tensor<T> matmul(const Tensor<T>& x, const Tensor<T>& w) {
  const std::size_t rows = x.shape[0], inner = x.shape[1], cols = w.shape[1];
  Tensor<T> y({rows, cols});
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t o = 0; o < cols; ++o) {
      T acc = 0;
      for (std::size_t i = 0; i < inner; ++i)
        acc += x.data[t * inner + i] * w.data[i * cols + o];
      y.data[t * cols + o] = acc;
    }
  return y;
}

// Explicit sliding-window depthwise convolution with zero padding.
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& kernel,
                           long dilation) {
  const long C = static_cast<long>(x.shape[0]);
  const long H = static_cast<long>(x.shape[1]);
  const long W = static_cast<long>(x.shape[2]);
  const long k = static_cast<long>(kernel.shape[1]);
  const long half = k / 2;
  Tensor<T> y(x.shape);
  for (long c = 0; c < C; ++c)
    for (long i = 0; i < H; ++i)
      for (long j = 0; j < W; ++j) {
        T acc = 0;
        for (long a = 0; a < k; ++a)
          for (long b = 0; b < k; ++b) {
            const long ii = i + (a - half) * dilation;
            const long jj = j + (b - half) * dilation;
            if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
            acc += kernel.data[(c * k + a) * k + b] * x.data[(c * H + ii) * W + jj];
          }
        y.data[(c * H + i) * W + j] = acc;
      }
  return y;
}

// Per-pixel channel matmul.
template <typename T>
Tensor<T> pointwise_conv(const Tensor<T>& x, const Tensor<T>& w) {
  const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
  const std::size_t Co = w.shape[1];
  Tensor<T> y({Co, H, W});
  for (std::size_t o = 0; o < Co; ++o)
    for (std::size_t p = 0; p < H * W; ++p) {
      T acc = 0;
      for (std::size_t c = 0; c < C; ++c)
        acc += x.data[c * H * W + p] * w.data[c * Co + o];
      y.data[o * H * W + p] = acc;
    }
  return y;
}

// Direct causal summation with per-output max shift and extended-precision
// accumulation.
template <typename T>
Tensor<T> wkv_causal_direct(const Tensor<T>& k, const Tensor<T>& v,
                            const wkv::WkvParams<T>& params) {
  const std::size_t Tn = k.shape[0], C = k.shape[1];
  Tensor<T> out({Tn, C});
  for (std::size_t c = 0; c < C; ++c) {
    const long double w = params.w.data[c];
    const long double u = params.u.data[c];
    for (std::size_t t = 0; t < Tn; ++t) {
      long double m = u + static_cast<long double>(k.data[t * C + c]);
      for (std::size_t i = 0; i < t; ++i) {
        const long double e = -static_cast<long double>(t - 1 - i) * w +
                              static_cast<long double>(k.data[i * C + c]);
        if (e > m) m = e;
      }
      long double num = 0, den = 0;
      for (std::size_t i = 0; i < t; ++i) {
        const long double e =
            std::exp(-static_cast<long double>(t - 1 - i) * w +
                     static_cast<long double>(k.data[i * C + c]) - m);
        num += e * static_cast<long double>(v.data[i * C + c]);
        den += e;
      }
      const long double es =
          std::exp(u + static_cast<long double>(k.data[t * C + c]) - m);
      num += es * static_cast<long double>(v.data[t * C + c]);
      den += es;
      out.data[t * C + c] = static_cast<T>(num / den);
    }
  }
  return out;
}

}  // namespace oracle
}  // namespace rsrwkv::verify
