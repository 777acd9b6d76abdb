#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "rsrwkv/tensor.hpp"

// Primitive layer kernels. Every op is a pure function: inputs are const,
// the result is freshly allocated, and a non-finite output is a hard error.
// Each forward has a matching analytic backward used by the gradient tape.
namespace rsrwkv::ops {

// y[t,o] = sum_i x[t,i] * w[i,o] (+ bias[o])
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>* bias = nullptr) {
  check_shape(x.rank() == 2 && w.rank() == 2, "linear: rank-2 inputs required");
  check_shape(x.shape[1] == w.shape[0],
              "linear: inner dimensions differ " + shape_str(x.shape) + " vs " +
                  shape_str(w.shape));
  const std::size_t rows = x.shape[0], inner = x.shape[1], cols = w.shape[1];
  if (bias != nullptr)
    check_shape(bias->rank() == 1 && bias->shape[0] == cols,
                "linear: bias extent mismatch");
  Tensor<T> y({rows, cols});
  for (std::size_t t = 0; t < rows; ++t) {
    T* yrow = &y.data[t * cols];
    if (bias != nullptr)
      for (std::size_t o = 0; o < cols; ++o) yrow[o] = bias->data[o];
    for (std::size_t i = 0; i < inner; ++i) {
      const T xv = x.data[t * inner + i];
      const T* wrow = &w.data[i * cols];
      for (std::size_t o = 0; o < cols; ++o) yrow[o] += xv * wrow[o];
    }
  }
  ensure_finite(y, "linear");
  return y;
}

template <typename T>
struct LinearGrads {
  Tensor<T> gx, gw;
  std::optional<Tensor<T>> gbias;
};

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w,
                               const Tensor<T>& gy, bool has_bias) {
  const std::size_t rows = x.shape[0], inner = x.shape[1], cols = w.shape[1];
  check_shape(gy.rank() == 2 && gy.shape[0] == rows && gy.shape[1] == cols,
              "linear_backward: grad shape mismatch");
  LinearGrads<T> g{Tensor<T>({rows, inner}), Tensor<T>({inner, cols}), {}};
  for (std::size_t t = 0; t < rows; ++t) {
    const T* gyrow = &gy.data[t * cols];
    for (std::size_t i = 0; i < inner; ++i) {
      const T* wrow = &w.data[i * cols];
      T acc = 0;
      for (std::size_t o = 0; o < cols; ++o) acc += gyrow[o] * wrow[o];
      g.gx.data[t * inner + i] = acc;
      const T xv = x.data[t * inner + i];
      T* gwrow = &g.gw.data[i * cols];
      for (std::size_t o = 0; o < cols; ++o) gwrow[o] += xv * gyrow[o];
    }
  }
  if (has_bias) {
    Tensor<T> gb({cols});
    for (std::size_t t = 0; t < rows; ++t)
      for (std::size_t o = 0; o < cols; ++o) gb.data[o] += gy.data[t * cols + o];
    g.gbias = std::move(gb);
  }
  return g;
}

// Per-row normalization: y = gamma * (x - mean) / sqrt(var + eps) + beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
  check_shape(x.rank() == 2, "layer_norm: rank-2 input required");
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  check_shape(gamma.numel() == cols && beta.numel() == cols,
              "layer_norm: gamma/beta extent mismatch");
  check_config(eps > T(0), "layer_norm: eps must be positive");
  Tensor<T> y({rows, cols});
  for (std::size_t t = 0; t < rows; ++t) {
    const T* xr = &x.data[t * cols];
    T mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += xr[c];
    mean /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const T d = xr[c] - mean;
      var += d * d;
    }
    var /= static_cast<T>(cols);
    const T inv_std = T(1) / std::sqrt(var + eps);
    T* yr = &y.data[t * cols];
    for (std::size_t c = 0; c < cols; ++c)
      yr[c] = gamma.data[c] * (xr[c] - mean) * inv_std + beta.data[c];
  }
  ensure_finite(y, "layer_norm");
  return y;
}

template <typename T>
struct LayerNormGrads {
  Tensor<T> gx, ggamma, gbeta;
};

template <typename T>
LayerNormGrads<T> layer_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                                      T eps, const Tensor<T>& gy) {
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  check_shape(gy.same_shape(x), "layer_norm_backward: grad shape mismatch");
  LayerNormGrads<T> g{Tensor<T>({rows, cols}), Tensor<T>({cols}), Tensor<T>({cols})};
  const T n = static_cast<T>(cols);
  std::vector<T> xhat(cols);
  for (std::size_t t = 0; t < rows; ++t) {
    const T* xr = &x.data[t * cols];
    const T* gyr = &gy.data[t * cols];
    T mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += xr[c];
    mean /= n;
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const T d = xr[c] - mean;
      var += d * d;
    }
    var /= n;
    const T inv_std = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) xhat[c] = (xr[c] - mean) * inv_std;

    T sum_gxhat = 0, sum_gxhat_xhat = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const T gxhat = gyr[c] * gamma.data[c];
      sum_gxhat += gxhat;
      sum_gxhat_xhat += gxhat * xhat[c];
      g.ggamma.data[c] += gyr[c] * xhat[c];
      g.gbeta.data[c] += gyr[c];
    }
    T* gxr = &g.gx.data[t * cols];
    for (std::size_t c = 0; c < cols; ++c) {
      const T gxhat = gyr[c] * gamma.data[c];
      gxr[c] = inv_std * (gxhat - sum_gxhat / n - xhat[c] * sum_gxhat_xhat / n);
    }
  }
  return g;
}

// Depthwise 2-D convolution (cross-correlation) with zero same-padding.
// x: [C,H,W], kernel: [C,k,k] with odd k, per-channel filters.
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& kernel,
                           std::size_t dilation) {
  check_shape(x.rank() == 3, "depthwise_conv2d: input must be [C,H,W]");
  check_shape(kernel.rank() == 3 && kernel.shape[0] == x.shape[0] &&
                  kernel.shape[1] == kernel.shape[2],
              "depthwise_conv2d: kernel must be [C,k,k]");
  check_config(kernel.shape[1] % 2 == 1, "depthwise_conv2d: kernel size must be odd");
  check_config(dilation >= 1, "depthwise_conv2d: dilation must be >= 1");
  const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
  const std::size_t k = kernel.shape[1];
  const long half = static_cast<long>(k / 2);
  const long dil = static_cast<long>(dilation);
  Tensor<T> y({C, H, W});
  for (std::size_t c = 0; c < C; ++c) {
    const T* xc = &x.data[c * H * W];
    const T* kc = &kernel.data[c * k * k];
    T* yc = &y.data[c * H * W];
    for (long i = 0; i < static_cast<long>(H); ++i) {
      for (long j = 0; j < static_cast<long>(W); ++j) {
        T acc = 0;
        for (long a = -half; a <= half; ++a) {
          const long ii = i + a * dil;
          if (ii < 0 || ii >= static_cast<long>(H)) continue;
          for (long b = -half; b <= half; ++b) {
            const long jj = j + b * dil;
            if (jj < 0 || jj >= static_cast<long>(W)) continue;
            acc += kc[(a + half) * static_cast<long>(k) + (b + half)] *
                   xc[ii * static_cast<long>(W) + jj];
          }
        }
        yc[i * static_cast<long>(W) + j] = acc;
      }
    }
  }
  ensure_finite(y, "depthwise_conv2d");
  return y;
}

template <typename T>
struct DepthwiseGrads {
  Tensor<T> gx, gkernel;
};

template <typename T>
DepthwiseGrads<T> depthwise_conv2d_backward(const Tensor<T>& x,
                                            const Tensor<T>& kernel,
                                            std::size_t dilation,
                                            const Tensor<T>& gy) {
  check_shape(gy.same_shape(x), "depthwise_conv2d_backward: grad shape mismatch");
  const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
  const std::size_t k = kernel.shape[1];
  const long half = static_cast<long>(k / 2);
  const long dil = static_cast<long>(dilation);
  DepthwiseGrads<T> g{Tensor<T>({C, H, W}), Tensor<T>({C, k, k})};
  for (std::size_t c = 0; c < C; ++c) {
    const T* xc = &x.data[c * H * W];
    const T* kc = &kernel.data[c * k * k];
    const T* gyc = &gy.data[c * H * W];
    T* gxc = &g.gx.data[c * H * W];
    T* gkc = &g.gkernel.data[c * k * k];
    for (long i = 0; i < static_cast<long>(H); ++i) {
      for (long j = 0; j < static_cast<long>(W); ++j) {
        const T go = gyc[i * static_cast<long>(W) + j];
        for (long a = -half; a <= half; ++a) {
          const long ii = i + a * dil;
          if (ii < 0 || ii >= static_cast<long>(H)) continue;
          for (long b = -half; b <= half; ++b) {
            const long jj = j + b * dil;
            if (jj < 0 || jj >= static_cast<long>(W)) continue;
            const long kidx = (a + half) * static_cast<long>(k) + (b + half);
            gxc[ii * static_cast<long>(W) + jj] += go * kc[kidx];
            gkc[kidx] += go * xc[ii * static_cast<long>(W) + jj];
          }
        }
      }
    }
  }
  return g;
}

// 1x1 convolution across channels: x [C,H,W], w [C,C'] -> [C',H,W].
template <typename T>
Tensor<T> pointwise_conv(const Tensor<T>& x, const Tensor<T>& w) {
  check_shape(x.rank() == 3, "pointwise_conv: input must be [C,H,W]");
  check_shape(w.rank() == 2 && w.shape[0] == x.shape[0],
              "pointwise_conv: weight must be [C,C']");
  const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
  const std::size_t Co = w.shape[1], HW = H * W;
  Tensor<T> y({Co, H, W});
  for (std::size_t c = 0; c < C; ++c) {
    const T* xc = &x.data[c * HW];
    for (std::size_t o = 0; o < Co; ++o) {
      const T wv = w.data[c * Co + o];
      if (wv == T(0)) continue;
      T* yo = &y.data[o * HW];
      for (std::size_t p = 0; p < HW; ++p) yo[p] += wv * xc[p];
    }
  }
  ensure_finite(y, "pointwise_conv");
  return y;
}

template <typename T>
struct PointwiseGrads {
  Tensor<T> gx, gw;
};

template <typename T>
PointwiseGrads<T> pointwise_conv_backward(const Tensor<T>& x, const Tensor<T>& w,
                                          const Tensor<T>& gy) {
  const std::size_t C = x.shape[0], HW = x.shape[1] * x.shape[2];
  const std::size_t Co = w.shape[1];
  check_shape(gy.rank() == 3 && gy.shape[0] == Co && gy.shape[1] == x.shape[1] &&
                  gy.shape[2] == x.shape[2],
              "pointwise_conv_backward: grad shape mismatch");
  PointwiseGrads<T> g{Tensor<T>(x.shape), Tensor<T>(w.shape)};
  for (std::size_t c = 0; c < C; ++c) {
    const T* xc = &x.data[c * HW];
    T* gxc = &g.gx.data[c * HW];
    for (std::size_t o = 0; o < Co; ++o) {
      const T* gyo = &gy.data[o * HW];
      const T wv = w.data[c * Co + o];
      T gw_acc = 0;
      for (std::size_t p = 0; p < HW; ++p) {
        gxc[p] += wv * gyo[p];
        gw_acc += xc[p] * gyo[p];
      }
      g.gw.data[c * Co + o] = gw_acc;
    }
  }
  return g;
}

template <typename T>
T sigmoid_scalar(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y;
  y.shape = x.shape;
  y.data.resize(x.data.size());
  for (std::size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = sigmoid_scalar(x.data[i]);
  ensure_finite(y, "sigmoid");
  return y;
}

// d/dx sigmoid expressed through the saved output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& gy) {
  Tensor<T> gx;
  gx.shape = y.shape;
  gx.data.resize(y.data.size());
  for (std::size_t i = 0; i < y.data.size(); ++i)
    gx.data[i] = gy.data[i] * y.data[i] * (T(1) - y.data[i]);
  return gx;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y;
  y.shape = x.shape;
  y.data.resize(x.data.size());
  for (std::size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gy) {
  Tensor<T> gx;
  gx.shape = x.shape;
  gx.data.resize(x.data.size());
  for (std::size_t i = 0; i < x.data.size(); ++i)
    gx.data[i] = x.data[i] > T(0) ? gy.data[i] : T(0);
  return gx;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.same_shape(b), "add: shape mismatch");
  Tensor<T> y;
  y.shape = a.shape;
  y.data.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) y.data[i] = a.data[i] + b.data[i];
  ensure_finite(y, "add");
  return y;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.same_shape(b), "mul: shape mismatch");
  Tensor<T> y;
  y.shape = a.shape;
  y.data.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) y.data[i] = a.data[i] * b.data[i];
  ensure_finite(y, "mul");
  return y;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  Tensor<T> y;
  y.shape = x.shape;
  y.data.resize(x.data.size());
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = c * x.data[i];
  ensure_finite(y, "scale");
  return y;
}

// Token layout changes between the sequence view [T,C] (T = H*W, row-major
// grid) and the image view [C,H,W]. Pure data movement.
template <typename T>
Tensor<T> tokens_to_chw(const Tensor<T>& x, std::size_t H, std::size_t W) {
  check_shape(x.rank() == 2 && x.shape[0] == H * W,
              "tokens_to_chw: token count must equal H*W");
  const std::size_t C = x.shape[1];
  Tensor<T> y({C, H, W});
  for (std::size_t t = 0; t < H * W; ++t)
    for (std::size_t c = 0; c < C; ++c) y.data[c * H * W + t] = x.data[t * C + c];
  return y;
}

template <typename T>
Tensor<T> chw_to_tokens(const Tensor<T>& x) {
  check_shape(x.rank() == 3, "chw_to_tokens: input must be [C,H,W]");
  const std::size_t C = x.shape[0], HW = x.shape[1] * x.shape[2];
  Tensor<T> y({HW, C});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < HW; ++t) y.data[t * C + c] = x.data[c * HW + t];
  return y;
}

// out[r] = x[idx[r]]; idx is a permutation of the row indices.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<int>& idx) {
  check_shape(x.rank() == 2 && idx.size() == x.shape[0],
              "gather_rows: index length must match row count");
  const std::size_t C = x.shape[1];
  Tensor<T> y({idx.size(), C});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(&x.data[static_cast<std::size_t>(idx[r]) * C], C, &y.data[r * C]);
  return y;
}

template <typename T>
Tensor<T> scatter_rows(const Tensor<T>& gy, const std::vector<int>& idx) {
  const std::size_t C = gy.shape[1];
  Tensor<T> gx({idx.size(), C});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < C; ++c)
      gx.data[static_cast<std::size_t>(idx[r]) * C + c] += gy.data[r * C + c];
  return gx;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<const Tensor<T>*>& parts) {
  check_shape(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts[0]->shape[0];
  std::size_t cols = 0;
  for (const auto* p : parts) {
    check_shape(p->rank() == 2 && p->shape[0] == rows,
                "concat_cols: row counts differ");
    cols += p->shape[1];
  }
  Tensor<T> y({rows, cols});
  std::size_t off = 0;
  for (const auto* p : parts) {
    const std::size_t pc = p->shape[1];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(&p->data[r * pc], pc, &y.data[r * cols + off]);
    off += pc;
  }
  return y;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  check_shape(x.rank() == 2 && begin + count <= x.shape[1],
              "slice_cols: range out of bounds");
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  Tensor<T> y({rows, count});
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(&x.data[r * cols + begin], count, &y.data[r * count]);
  return y;
}

// Mean over the token axis: [T,C] -> [C].
template <typename T>
Tensor<T> row_mean(const Tensor<T>& x) {
  check_shape(x.rank() == 2, "row_mean: rank-2 input required");
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  Tensor<T> y({cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y.data[c] += x.data[r * cols + c];
  for (std::size_t c = 0; c < cols; ++c) y.data[c] /= static_cast<T>(rows);
  return y;
}

template <typename T>
Tensor<T> select_row(const Tensor<T>& x, std::size_t row) {
  check_shape(x.rank() == 2 && row < x.shape[0], "select_row: row out of range");
  const std::size_t cols = x.shape[1];
  Tensor<T> y({cols});
  std::copy_n(&x.data[row * cols], cols, y.data.begin());
  return y;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data) acc += v;
  return Tensor<T>::scalar(acc);
}

// Non-overlapping patch extraction: image [3,H,W] with H,W divisible by p
// -> [T, 3*p*p], rows ordered over the patch grid row-major, each row
// flattened as (channel, py, px).
template <typename T>
Tensor<T> gather_patches(const Tensor<T>& image, std::size_t p) {
  check_shape(image.rank() == 3, "gather_patches: image must be [3,H,W]");
  check_config(p >= 1, "gather_patches: patch size must be positive");
  const std::size_t Cin = image.shape[0], H = image.shape[1], W = image.shape[2];
  check_config(H % p == 0 && W % p == 0,
               "gather_patches: image extents must be divisible by patch size");
  const std::size_t gh = H / p, gw = W / p;
  Tensor<T> y({gh * gw, Cin * p * p});
  for (std::size_t gi = 0; gi < gh; ++gi)
    for (std::size_t gj = 0; gj < gw; ++gj) {
      T* row = &y.data[(gi * gw + gj) * Cin * p * p];
      std::size_t o = 0;
      for (std::size_t c = 0; c < Cin; ++c)
        for (std::size_t a = 0; a < p; ++a)
          for (std::size_t b = 0; b < p; ++b)
            row[o++] = image.data[(c * H + gi * p + a) * W + gj * p + b];
    }
  return y;
}

template <typename T>
Tensor<T> scatter_patches(const Tensor<T>& gy, std::size_t Cin, std::size_t H,
                          std::size_t W, std::size_t p) {
  Tensor<T> gimg({Cin, H, W});
  const std::size_t gw = W / p;
  for (std::size_t t = 0; t < gy.shape[0]; ++t) {
    const std::size_t gi = t / gw, gj = t % gw;
    const T* row = &gy.data[t * Cin * p * p];
    std::size_t o = 0;
    for (std::size_t c = 0; c < Cin; ++c)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
          gimg.data[(c * H + gi * p + a) * W + gj * p + b] += row[o++];
  }
  return gimg;
}

// Rank-1 linear map for pooled features: y[o] = sum_i x[i]*w[i,o] (+ b[o]).
template <typename T>
Tensor<T> linear_vec(const Tensor<T>& x, const Tensor<T>& w,
                     const Tensor<T>* bias = nullptr) {
  check_shape(x.rank() == 1 && w.rank() == 2 && w.shape[0] == x.shape[0],
              "linear_vec: shape mismatch");
  const std::size_t inner = x.shape[0], cols = w.shape[1];
  Tensor<T> y({cols});
  if (bias != nullptr) {
    check_shape(bias->numel() == cols, "linear_vec: bias extent mismatch");
    y.data = bias->data;
  }
  for (std::size_t i = 0; i < inner; ++i)
    for (std::size_t o = 0; o < cols; ++o) y.data[o] += x.data[i] * w.data[i * cols + o];
  ensure_finite(y, "linear_vec");
  return y;
}

template <typename T>
struct LinearVecGrads {
  Tensor<T> gx, gw;
  std::optional<Tensor<T>> gbias;
};

template <typename T>
LinearVecGrads<T> linear_vec_backward(const Tensor<T>& x, const Tensor<T>& w,
                                      const Tensor<T>& gy, bool has_bias) {
  const std::size_t inner = x.shape[0], cols = w.shape[1];
  LinearVecGrads<T> g{Tensor<T>({inner}), Tensor<T>({inner, cols}), {}};
  for (std::size_t i = 0; i < inner; ++i) {
    T acc = 0;
    for (std::size_t o = 0; o < cols; ++o) {
      acc += gy.data[o] * w.data[i * cols + o];
      g.gw.data[i * cols + o] = x.data[i] * gy.data[o];
    }
    g.gx.data[i] = acc;
  }
  if (has_bias) g.gbias = gy;
  return g;
}

// Numerically stable log(sum(exp(logits))) helpers for the classifier loss.
template <typename T>
T log_sum_exp(const Tensor<T>& logits) {
  T m = logits.data[0];
  for (T v : logits.data) m = std::max(m, v);
  T s = 0;
  for (T v : logits.data) s += std::exp(v - m);
  return m + std::log(s);
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::size_t target) {
  check_shape(logits.rank() == 1 && target < logits.shape[0],
              "cross_entropy: bad target index");
  return log_sum_exp(logits) - logits.data[target];
}

template <typename T>
Tensor<T> cross_entropy_backward(const Tensor<T>& logits, std::size_t target,
                                 T gloss) {
  const T lse = log_sum_exp(logits);
  Tensor<T> g({logits.shape[0]});
  for (std::size_t i = 0; i < logits.shape[0]; ++i)
    g.data[i] = gloss * std::exp(logits.data[i] - lse);
  g.data[target] -= gloss;
  return g;
}

}  // namespace rsrwkv::ops
