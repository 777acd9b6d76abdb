#pragma once

#include <array>
#include <cstddef>

#include "rsrwkv/tape.hpp"
#include "rsrwkv/tensor.hpp"

namespace rsrwkv {

// Residual multi-branch token shift: three depthwise 3x3 convolutions at
// dilations 1, 2, 3, each followed by a 1x1 channel mix, summed onto the
// input. No biases anywhere, so the map is exactly linear in x; the dilation
// set gives the widest branch a 7x7 support.
template <typename T>
struct MvcShiftLayer {
  static constexpr std::array<std::size_t, 3> kDilations{1, 2, 3};
  std::array<Tensor<T>, 3> dw;  // each [C,3,3]
  std::array<Tensor<T>, 3> pw;  // each [C,C]
};

template <typename T>
void validate_mvc_layer(const MvcShiftLayer<T>& layer, std::size_t C) {
  for (std::size_t i = 0; i < 3; ++i) {
    check_shape(layer.dw[i].rank() == 3 && layer.dw[i].shape[0] == C &&
                    layer.dw[i].shape[1] == 3 && layer.dw[i].shape[2] == 3,
                "mvc_shift: depthwise kernel must be [C,3,3]");
    check_shape(layer.pw[i].rank() == 2 && layer.pw[i].shape[0] == C &&
                    layer.pw[i].shape[1] == C,
                "mvc_shift: pointwise weight must be [C,C]");
  }
}

namespace ag {

template <typename T>
int mvc_shift(Tape<T>& tp, int x, const std::array<int, 3>& dw,
              const std::array<int, 3>& pw, std::size_t H, std::size_t W) {
  check_shape(tp.value(x).shape[0] == H * W, "mvc_shift: token count must be H*W");
  int chw = ag::tokens_to_chw(tp, x, H, W);
  int acc = chw;
  for (std::size_t i = 0; i < 3; ++i) {
    int branch = ag::depthwise_conv2d(tp, chw, dw[i],
                                      MvcShiftLayer<T>::kDilations[i]);
    acc = ag::add(tp, acc, ag::pointwise_conv(tp, branch, pw[i]));
  }
  return ag::chw_to_tokens(tp, acc);
}

}  // namespace ag

template <typename T>
Tensor<T> mvc_shift(const Tensor<T>& x, const MvcShiftLayer<T>& layer,
                    std::size_t H, std::size_t W) {
  validate_mvc_layer(layer, x.shape[1]);
  Tape<T> tp(false);
  int xid = tp.leaf(x);
  std::array<int, 3> dw{}, pw{};
  for (std::size_t i = 0; i < 3; ++i) {
    dw[i] = tp.leaf(layer.dw[i]);
    pw[i] = tp.leaf(layer.pw[i]);
  }
  return tp.value(ag::mvc_shift(tp, xid, dw, pw, H, W));
}

// Four-direction neighbor shift: channel quarter q of the shifted map takes
// its values from the neighbor in direction q (up, down, left, right), zero
// at the borders, then blends with the original token: mu*x + (1-mu)*shift.
template <typename T>
Tensor<T> q_shift(const Tensor<T>& x, std::size_t H, std::size_t W,
                  const Tensor<T>* mu = nullptr) {
  check_shape(x.rank() == 2 && x.shape[0] == H * W,
              "q_shift: token count must be H*W");
  const std::size_t C = x.shape[1];
  check_config(C % 4 == 0, "q_shift: channel count must be divisible by 4");
  if (mu != nullptr)
    check_shape(mu->numel() == C, "q_shift: mu extent mismatch");
  const std::size_t quarter = C / 4;
  // neighbor row/col offsets per quarter: up, down, left, right
  const long di[4] = {-1, 1, 0, 0};
  const long dj[4] = {0, 0, -1, 1};
  Tensor<T> out({H * W, C});
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t t = i * W + j;
      for (std::size_t q = 0; q < 4; ++q) {
        const long ni = static_cast<long>(i) + di[q];
        const long nj = static_cast<long>(j) + dj[q];
        const bool inside = ni >= 0 && ni < static_cast<long>(H) && nj >= 0 &&
                            nj < static_cast<long>(W);
        const std::size_t src =
            inside ? static_cast<std::size_t>(ni) * W + static_cast<std::size_t>(nj)
                   : 0;
        for (std::size_t c = q * quarter; c < (q + 1) * quarter; ++c) {
          const T m = mu != nullptr ? mu->data[c] : T(0.5);
          const T shifted = inside ? x.data[src * C + c] : T(0);
          out.data[t * C + c] = m * x.data[t * C + c] + (T(1) - m) * shifted;
        }
      }
    }
  }
  ensure_finite(out, "q_shift");
  return out;
}

// 1-D token shift: x'_t = mu * x_t + (1 - mu) * x_{t-1}, with x_{-1} = 0.
template <typename T>
Tensor<T> lerp_shift(const Tensor<T>& x, const Tensor<T>& mu) {
  check_shape(x.rank() == 2, "lerp_shift: input must be [T,C]");
  const std::size_t Tn = x.shape[0], C = x.shape[1];
  check_shape(mu.numel() == C, "lerp_shift: mu extent mismatch");
  Tensor<T> out({Tn, C});
  for (std::size_t t = 0; t < Tn; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      const T prev = t == 0 ? T(0) : x.data[(t - 1) * C + c];
      out.data[t * C + c] =
          mu.data[c] * x.data[t * C + c] + (T(1) - mu.data[c]) * prev;
    }
  ensure_finite(out, "lerp_shift");
  return out;
}

}  // namespace rsrwkv
