#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rsrwkv/model.hpp"
#include "rsrwkv/tensor.hpp"

namespace rsrwkv::analysis {

// Exact stored-value counts per module. Mix projections carry no biases;
// patch embedding and the classifier head do.
struct ParamCounts {
  std::size_t patch_embed = 0;
  std::size_t spatial_rkv = 0;    // R/K/V projections of one spatial mix
  std::size_t spatial_total = 0;  // one block's spatial mix
  std::size_t channel_total = 0;  // one block's channel mix
  std::size_t blocks_total = 0;   // all blocks
  std::size_t head = 0;
  std::size_t total = 0;
};

// R/K/V projection subtotal: C^2 + 2*C*(C/d). Evaluates to 3C^2, 2C^2 and
// 1.5C^2 for direction counts 1, 2 and 4.
std::size_t spatial_rkv_params(std::size_t embed_dim, int directions);

ParamCounts count_params(const ModelConfig& cfg);

// Work accounting in multiply-accumulate equivalents (1 MAC = 2 FLOPs).
// Convention, applied uniformly:
//   - matrix multiplies and convolutions: exact MAC counts
//   - bias adds, activations, gates, residual adds: 1 per element
//   - layer norm: 6 per element (two reduction passes, four elementwise)
//   - WKV attention: 6 per token-channel per direction pass; directions
//     process C/d channels each, so the total is 6*T*C regardless of d
// The reference numbers this is compared against count one MAC as one FLOP,
// so comparisons against them use the MAC total directly.
struct FlopCounts {
  std::size_t total = 0;  // MAC-equivalents
  std::size_t head = 0;   // classifier linear (resolution independent)
  std::size_t fixed = 0;  // other resolution-independent work: the per-block
                          // channel-gate convolution over pooled channels
  // strictly linear in the token count
  std::size_t body() const { return total - head - fixed; }
};

FlopCounts count_flops(const ModelConfig& cfg, std::size_t img_h,
                       std::size_t img_w);

// WKV MAC-equivalents for one directional-attention call; constant in the
// direction count by construction.
std::size_t wkv_work(std::size_t tokens, std::size_t embed_dim);

// ---------------------------------------------------------------------------
// Effective receptive field
// ---------------------------------------------------------------------------

// Normalized log-contribution map: grid values in [0,1] with max exactly 1,
// plus the fraction of pixels above 0.5.
template <typename T>
struct ErfReport {
  Tensor<T> grid;  // [Himg, Wimg]
  double high_ratio = 0.0;
};

// abs_grad: accumulated |d probe / d pixel|, already summed over images and
// input channels. Throws if the gradient is identically zero.
template <typename T>
ErfReport<T> make_erf_report(const Tensor<T>& abs_grad) {
  check_shape(abs_grad.rank() == 2, "erf: gradient grid must be rank 2");
  T gmax = T(0);
  for (T v : abs_grad.data) {
    check_usage(v >= T(0), "erf: gradient magnitudes must be non-negative");
    if (v > gmax) gmax = v;
  }
  if (gmax == T(0))
    throw NumericError("erf: gradient is zero everywhere (degenerate report)");
  ErfReport<T> rep;
  rep.grid = Tensor<T>(abs_grad.shape);
  const double denom = std::log10(1.0 + static_cast<double>(gmax));
  std::size_t high = 0;
  for (std::size_t i = 0; i < abs_grad.numel(); ++i) {
    const double l =
        std::log10(1.0 + static_cast<double>(abs_grad.data[i])) / denom;
    rep.grid.data[i] = static_cast<T>(l);
    if (l > 0.5) ++high;
  }
  rep.high_ratio = static_cast<double>(high) / static_cast<double>(abs_grad.numel());
  return rep;
}

// Input-gradient footprint of the centre token's final-stage features,
// accumulated over a batch of images (all the same extents).
template <typename T>
ErfReport<T> erf_map(const BackboneWeights<T>& weights,
                     const std::vector<Tensor<T>>& images) {
  check_usage(!images.empty(), "erf: at least one image required");
  check_shape(images[0].rank() == 3 && images[0].shape[0] == 3,
              "erf: images must be [3,H,W]");
  const std::size_t H = images[0].shape[1], W = images[0].shape[2];
  Tensor<T> acc({H, W});
  for (const Tensor<T>& image : images) {
    check_shape(image.shape == images[0].shape, "erf: image extents differ");
    Tensor<T> g = input_gradient(image, weights);  // [3,H,W]
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < H * W; ++p)
        acc.data[p] += std::abs(g.data[c * H * W + p]);
  }
  return make_erf_report(acc);
}

// ---------------------------------------------------------------------------
// Channel activation statistics
// ---------------------------------------------------------------------------

template <typename T>
struct ChannelStats {
  std::vector<double> before, after;  // per-channel mean |activation|
};

template <typename T>
ChannelStats<T> channel_stats(const Tensor<T>& x_before, const Tensor<T>& x_after) {
  check_shape(x_before.rank() == 2 && x_before.same_shape(x_after),
              "channel_stats: inputs must be [T,C] with equal shapes");
  const std::size_t Tn = x_before.shape[0], C = x_before.shape[1];
  ChannelStats<T> s;
  s.before.assign(C, 0.0);
  s.after.assign(C, 0.0);
  for (std::size_t t = 0; t < Tn; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      s.before[c] += std::abs(static_cast<double>(x_before.data[t * C + c]));
      s.after[c] += std::abs(static_cast<double>(x_after.data[t * C + c]));
    }
  for (std::size_t c = 0; c < C; ++c) {
    s.before[c] /= static_cast<double>(Tn);
    s.after[c] /= static_cast<double>(Tn);
  }
  return s;
}

std::string channel_stats_csv(const std::vector<double>& before,
                              const std::vector<double>& after);

}  // namespace rsrwkv::analysis
