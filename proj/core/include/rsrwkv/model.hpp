#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rsrwkv/rng.hpp"
#include "rsrwkv/scan2d.hpp"
#include "rsrwkv/tape.hpp"
#include "rsrwkv/tensor.hpp"
#include "rsrwkv/token_shift.hpp"

namespace rsrwkv {

// Architecture hyperparameters. The backbone is plain and isotropic: four
// stages of identical blocks at a fixed token resolution, stage boundaries
// are feature-tap points only. No positional embedding and no class token;
// the decay term plus scan geometry carry position.
struct ModelConfig {
  std::size_t patch_size = 16;
  std::size_t embed_dim = 192;
  std::array<std::size_t, 4> stage_depths{3, 3, 3, 3};
  std::size_t hidden_rate = 2;
  int directions = 4;  // 1 | 2 | 4 (1 is the single-scan baseline)
  std::size_t num_classes = 2;
  std::size_t eca_kernel = 0;  // odd size, or 0 for the adaptive rule

  static constexpr double kLnEps = 1e-5;

  std::size_t depth_total() const {
    return stage_depths[0] + stage_depths[1] + stage_depths[2] + stage_depths[3];
  }
};

inline void validate_config(const ModelConfig& cfg) {
  check_config(cfg.patch_size >= 1, "config: patch size must be positive");
  check_config(cfg.embed_dim >= 1, "config: embed dim must be positive");
  check_config(cfg.directions == 1 || cfg.directions == 2 || cfg.directions == 4,
               "config: directions must be 1, 2 or 4");
  check_config(cfg.embed_dim % static_cast<std::size_t>(cfg.directions) == 0,
               "config: embed dim not divisible by direction count");
  check_config(cfg.hidden_rate >= 1, "config: hidden rate must be positive");
  check_config(cfg.num_classes >= 1, "config: class count must be positive");
  check_config(cfg.depth_total() >= 1, "config: at least one block required");
  check_config(cfg.eca_kernel == 0 || cfg.eca_kernel % 2 == 1,
               "config: eca kernel size must be odd");
}

// Adaptive 1-D kernel size for the channel gate: nearest odd integer to
// (log2(C) + 1) / 2, never below 1.
inline std::size_t eca_kernel_size(std::size_t channels, std::size_t override_k) {
  if (override_k != 0) {
    check_config(override_k % 2 == 1, "eca: kernel size must be odd");
    return override_k;
  }
  const double t = std::floor((std::log2(static_cast<double>(channels)) + 1.0) / 2.0);
  std::size_t k = static_cast<std::size_t>(t > 1.0 ? t : 1.0);
  if (k % 2 == 0) k += 1;
  return k;
}

// ---------------------------------------------------------------------------
// Weight containers. Declaration order here fixes the checkpoint ordering.
// ---------------------------------------------------------------------------

template <typename T>
struct SpatialMixWeights {
  Tensor<T> ln_gamma, ln_beta;  // [C]
  MvcShiftLayer<T> shift;
  Wkv2dLayer<T> attn;
};

template <typename T>
struct ChannelMixWeights {
  Tensor<T> ln_gamma, ln_beta;  // [C]
  MvcShiftLayer<T> shift;
  Tensor<T> wr;          // [C, C]
  Tensor<T> wk;          // [C, rate*C]
  Tensor<T> wv;          // [rate*C, C]
  Tensor<T> eca_kernel;  // [k]
};

template <typename T>
struct BlockWeights {
  SpatialMixWeights<T> spatial;
  ChannelMixWeights<T> channel;
};

template <typename T>
struct BackboneWeights {
  ModelConfig config;
  Tensor<T> patch_w;  // [3*p*p, C]
  Tensor<T> patch_b;  // [C]
  std::vector<BlockWeights<T>> blocks;
  Tensor<T> head_w;  // [C, num_classes]
  Tensor<T> head_b;  // [num_classes]
};

// Visits every parameter tensor as (name, tensor), module order then
// declaration order. This single walk defines init, checkpoint and count
// ordering.
template <typename W, typename F>
void visit_params_impl(W& w, F&& f) {
  f("patch_embed.weight", w.patch_w);
  f("patch_embed.bias", w.patch_b);
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    const std::string base = "blocks." + std::to_string(b) + ".";
    auto& blk = w.blocks[b];
    f(base + "spatial.ln.gamma", blk.spatial.ln_gamma);
    f(base + "spatial.ln.beta", blk.spatial.ln_beta);
    for (std::size_t i = 0; i < 3; ++i) {
      f(base + "spatial.shift.dw" + std::to_string(i), blk.spatial.shift.dw[i]);
      f(base + "spatial.shift.pw" + std::to_string(i), blk.spatial.shift.pw[i]);
    }
    f(base + "spatial.wr", blk.spatial.attn.wr);
    f(base + "spatial.wk", blk.spatial.attn.wk);
    f(base + "spatial.wv", blk.spatial.attn.wv);
    f(base + "spatial.wo", blk.spatial.attn.wo);
    f(base + "spatial.decay", blk.spatial.attn.params.w);
    f(base + "spatial.bonus", blk.spatial.attn.params.u);
    f(base + "channel.ln.gamma", blk.channel.ln_gamma);
    f(base + "channel.ln.beta", blk.channel.ln_beta);
    for (std::size_t i = 0; i < 3; ++i) {
      f(base + "channel.shift.dw" + std::to_string(i), blk.channel.shift.dw[i]);
      f(base + "channel.shift.pw" + std::to_string(i), blk.channel.shift.pw[i]);
    }
    f(base + "channel.wr", blk.channel.wr);
    f(base + "channel.wk", blk.channel.wk);
    f(base + "channel.wv", blk.channel.wv);
    f(base + "channel.eca", blk.channel.eca_kernel);
  }
  f("head.weight", w.head_w);
  f("head.bias", w.head_b);
}

template <typename T, typename F>
void visit_params(BackboneWeights<T>& w, F&& f) {
  visit_params_impl(w, std::forward<F>(f));
}
template <typename T, typename F>
void visit_params(const BackboneWeights<T>& w, F&& f) {
  visit_params_impl(w, std::forward<F>(f));
}

template <typename T>
std::size_t param_count(const BackboneWeights<T>& w) {
  std::size_t n = 0;
  visit_params(w, [&n](const std::string&, const Tensor<T>& t) { n += t.numel(); });
  return n;
}

// Allocates weight tensors for a config (values zero).
template <typename T>
BackboneWeights<T> make_backbone(const ModelConfig& cfg) {
  validate_config(cfg);
  const std::size_t C = cfg.embed_dim;
  const std::size_t head = C / static_cast<std::size_t>(cfg.directions);
  const std::size_t hidden = cfg.hidden_rate * C;
  const std::size_t keca = eca_kernel_size(C, cfg.eca_kernel);

  BackboneWeights<T> w;
  w.config = cfg;
  w.patch_w = Tensor<T>({3 * cfg.patch_size * cfg.patch_size, C});
  w.patch_b = Tensor<T>({C});
  w.blocks.resize(cfg.depth_total());
  for (auto& blk : w.blocks) {
    blk.spatial.ln_gamma = Tensor<T>({C});
    blk.spatial.ln_beta = Tensor<T>({C});
    for (std::size_t i = 0; i < 3; ++i) {
      blk.spatial.shift.dw[i] = Tensor<T>({C, 3, 3});
      blk.spatial.shift.pw[i] = Tensor<T>({C, C});
      blk.channel.shift.dw[i] = Tensor<T>({C, 3, 3});
      blk.channel.shift.pw[i] = Tensor<T>({C, C});
    }
    blk.spatial.attn.directions = cfg.directions;
    blk.spatial.attn.wr = Tensor<T>({C, C});
    blk.spatial.attn.wk = Tensor<T>({C, head});
    blk.spatial.attn.wv = Tensor<T>({C, head});
    blk.spatial.attn.wo = Tensor<T>({C, C});
    blk.spatial.attn.params.w = Tensor<T>({head});
    blk.spatial.attn.params.u = Tensor<T>({head});
    blk.channel.ln_gamma = Tensor<T>({C});
    blk.channel.ln_beta = Tensor<T>({C});
    blk.channel.wr = Tensor<T>({C, C});
    blk.channel.wk = Tensor<T>({C, hidden});
    blk.channel.wv = Tensor<T>({hidden, C});
    blk.channel.eca_kernel = Tensor<T>({keca});
  }
  w.head_w = Tensor<T>({C, cfg.num_classes});
  w.head_b = Tensor<T>({cfg.num_classes});
  return w;
}

// Standard init: truncated normal (std 0.02) for projection and convolution
// weights, zero biases, LN gamma 1, decay linearly spaced in [-1,1], bonus 0.
template <typename T>
BackboneWeights<T> init_backbone(const ModelConfig& cfg, std::uint64_t seed) {
  BackboneWeights<T> w = make_backbone<T>(cfg);
  Rng rng(seed);
  const std::size_t head = cfg.embed_dim / static_cast<std::size_t>(cfg.directions);
  fill_trunc_normal(rng, w.patch_w, 0.02);
  for (auto& blk : w.blocks) {
    for (auto& g : blk.spatial.ln_gamma.data) g = T(1);
    for (auto& g : blk.channel.ln_gamma.data) g = T(1);
    for (std::size_t i = 0; i < 3; ++i) {
      fill_trunc_normal(rng, blk.spatial.shift.dw[i], 0.02);
      fill_trunc_normal(rng, blk.spatial.shift.pw[i], 0.02);
      fill_trunc_normal(rng, blk.channel.shift.dw[i], 0.02);
      fill_trunc_normal(rng, blk.channel.shift.pw[i], 0.02);
    }
    fill_trunc_normal(rng, blk.spatial.attn.wr, 0.02);
    fill_trunc_normal(rng, blk.spatial.attn.wk, 0.02);
    fill_trunc_normal(rng, blk.spatial.attn.wv, 0.02);
    fill_trunc_normal(rng, blk.spatial.attn.wo, 0.02);
    blk.spatial.attn.params = wkv::default_params<T>(head);
    fill_trunc_normal(rng, blk.channel.wr, 0.02);
    fill_trunc_normal(rng, blk.channel.wk, 0.02);
    fill_trunc_normal(rng, blk.channel.wv, 0.02);
    fill_trunc_normal(rng, blk.channel.eca_kernel, 0.02);
  }
  fill_trunc_normal(rng, w.head_w, 0.02);
  return w;
}

// ---------------------------------------------------------------------------
// Channel gate (per-channel sigmoid scaling from pooled statistics)
// ---------------------------------------------------------------------------

namespace detail {

// attn[c] = sigmoid(conv1d(mean over tokens)), same-padded over channels.
template <typename T>
std::vector<T> eca_gate(const Tensor<T>& x, const Tensor<T>& kernel) {
  const std::size_t Tn = x.shape[0], C = x.shape[1];
  const std::size_t K = kernel.numel();
  const long off = static_cast<long>(K / 2);
  std::vector<T> pooled(C, T(0));
  for (std::size_t t = 0; t < Tn; ++t)
    for (std::size_t c = 0; c < C; ++c) pooled[c] += x.data[t * C + c];
  for (auto& p : pooled) p /= static_cast<T>(Tn);
  std::vector<T> gate(C);
  for (std::size_t c = 0; c < C; ++c) {
    T z = 0;
    for (std::size_t j = 0; j < K; ++j) {
      const long src = static_cast<long>(c) + static_cast<long>(j) - off;
      if (src < 0 || src >= static_cast<long>(C)) continue;
      z += kernel.data[j] * pooled[static_cast<std::size_t>(src)];
    }
    gate[c] = ops::sigmoid_scalar(z);
  }
  return gate;
}

}  // namespace detail

template <typename T>
Tensor<T> eca(const Tensor<T>& x, const Tensor<T>& kernel) {
  check_shape(x.rank() == 2, "eca: input must be [T,C]");
  check_config(kernel.numel() % 2 == 1, "eca: kernel size must be odd");
  const auto gate = detail::eca_gate(x, kernel);
  const std::size_t Tn = x.shape[0], C = x.shape[1];
  Tensor<T> y({Tn, C});
  for (std::size_t t = 0; t < Tn; ++t)
    for (std::size_t c = 0; c < C; ++c)
      y.data[t * C + c] = gate[c] * x.data[t * C + c];
  ensure_finite(y, "eca");
  return y;
}

namespace ag {

template <typename T>
int eca(Tape<T>& tp, int x, int kernel) {
  return tp.record(
      rsrwkv::eca(tp.value(x), tp.value(kernel)), {x, kernel},
      [x, kernel](Tape<T>& t, int self) {
        const Tensor<T>& xv = t.value(x);
        const Tensor<T>& kv = t.value(kernel);
        const Tensor<T>& gy = t.grad(self);
        const std::size_t Tn = xv.shape[0], C = xv.shape[1], K = kv.numel();
        const long off = static_cast<long>(K / 2);

        std::vector<T> pooled(C, T(0));
        for (std::size_t tt = 0; tt < Tn; ++tt)
          for (std::size_t c = 0; c < C; ++c) pooled[c] += xv.data[tt * C + c];
        for (auto& p : pooled) p /= static_cast<T>(Tn);
        const auto gate = rsrwkv::detail::eca_gate(xv, kv);

        // d gate: collect grad through the scaling, then through sigmoid.
        std::vector<T> ggate(C, T(0));
        Tensor<T> gx({Tn, C});
        for (std::size_t tt = 0; tt < Tn; ++tt)
          for (std::size_t c = 0; c < C; ++c) {
            ggate[c] += gy.data[tt * C + c] * xv.data[tt * C + c];
            gx.data[tt * C + c] = gy.data[tt * C + c] * gate[c];
          }
        std::vector<T> gz(C);
        for (std::size_t c = 0; c < C; ++c)
          gz[c] = ggate[c] * gate[c] * (T(1) - gate[c]);

        Tensor<T> gkernel({K});
        std::vector<T> gpooled(C, T(0));
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t j = 0; j < K; ++j) {
            const long src = static_cast<long>(c) + static_cast<long>(j) - off;
            if (src < 0 || src >= static_cast<long>(C)) continue;
            gkernel.data[j] += gz[c] * pooled[static_cast<std::size_t>(src)];
            gpooled[static_cast<std::size_t>(src)] += gz[c] * kv.data[j];
          }
        for (std::size_t tt = 0; tt < Tn; ++tt)
          for (std::size_t c = 0; c < C; ++c)
            gx.data[tt * C + c] += gpooled[c] / static_cast<T>(Tn);

        t.add_grad(x, std::move(gx));
        t.add_grad(kernel, std::move(gkernel));
      });
}

}  // namespace ag

// ---------------------------------------------------------------------------
// Taped model graph. The id mirrors below let one weight struct drive both
// the training path and the no-grad inference path.
// ---------------------------------------------------------------------------

struct TapedMvc {
  std::array<int, 3> dw{}, pw{};
};
struct TapedSpatial {
  int ln_gamma = -1, ln_beta = -1;
  TapedMvc shift;
  int wr = -1, wk = -1, wv = -1, wo = -1, decay = -1, bonus = -1;
};
struct TapedChannel {
  int ln_gamma = -1, ln_beta = -1;
  TapedMvc shift;
  int wr = -1, wk = -1, wv = -1, eca = -1;
};
struct TapedBlock {
  TapedSpatial spatial;
  TapedChannel channel;
};
struct TapedBackbone {
  int patch_w = -1, patch_b = -1;
  std::vector<TapedBlock> blocks;
  int head_w = -1, head_b = -1;
};

template <typename T>
TapedMvc stage_mvc(Tape<T>& tp, const MvcShiftLayer<T>& layer, bool req) {
  TapedMvc m;
  for (std::size_t i = 0; i < 3; ++i) {
    m.dw[i] = tp.leaf(layer.dw[i], req);
    m.pw[i] = tp.leaf(layer.pw[i], req);
  }
  return m;
}

template <typename T>
TapedBackbone stage_backbone(Tape<T>& tp, const BackboneWeights<T>& w,
                             bool requires_grad) {
  TapedBackbone s;
  s.patch_w = tp.leaf(w.patch_w, requires_grad);
  s.patch_b = tp.leaf(w.patch_b, requires_grad);
  s.blocks.reserve(w.blocks.size());
  for (const auto& blk : w.blocks) {
    TapedBlock tb;
    tb.spatial.ln_gamma = tp.leaf(blk.spatial.ln_gamma, requires_grad);
    tb.spatial.ln_beta = tp.leaf(blk.spatial.ln_beta, requires_grad);
    tb.spatial.shift = stage_mvc(tp, blk.spatial.shift, requires_grad);
    tb.spatial.wr = tp.leaf(blk.spatial.attn.wr, requires_grad);
    tb.spatial.wk = tp.leaf(blk.spatial.attn.wk, requires_grad);
    tb.spatial.wv = tp.leaf(blk.spatial.attn.wv, requires_grad);
    tb.spatial.wo = tp.leaf(blk.spatial.attn.wo, requires_grad);
    tb.spatial.decay = tp.leaf(blk.spatial.attn.params.w, requires_grad);
    tb.spatial.bonus = tp.leaf(blk.spatial.attn.params.u, requires_grad);
    tb.channel.ln_gamma = tp.leaf(blk.channel.ln_gamma, requires_grad);
    tb.channel.ln_beta = tp.leaf(blk.channel.ln_beta, requires_grad);
    tb.channel.shift = stage_mvc(tp, blk.channel.shift, requires_grad);
    tb.channel.wr = tp.leaf(blk.channel.wr, requires_grad);
    tb.channel.wk = tp.leaf(blk.channel.wk, requires_grad);
    tb.channel.wv = tp.leaf(blk.channel.wv, requires_grad);
    tb.channel.eca = tp.leaf(blk.channel.eca_kernel, requires_grad);
    s.blocks.push_back(tb);
  }
  s.head_w = tp.leaf(w.head_w, requires_grad);
  s.head_b = tp.leaf(w.head_b, requires_grad);
  return s;
}

// Captured channel-gate activations (input/output of the gate per block),
// for the channel statistics report.
template <typename T>
struct EcaCapture {
  std::vector<Tensor<T>> before, after;
};

namespace ag {

// X_s = MVC-Shift(LN(X)), then the directional attention with gating and
// output projection. The residual add is the caller's.
template <typename T>
int spatial_mix(Tape<T>& tp, int x, const TapedSpatial& w, int directions,
                std::size_t H, std::size_t W) {
  int h = ag::layer_norm(tp, x, w.ln_gamma, w.ln_beta,
                         static_cast<T>(ModelConfig::kLnEps));
  int s = ag::mvc_shift(tp, h, w.shift.dw, w.shift.pw, H, W);
  const auto orders = scan_orders_for(directions, H, W);
  return ag::wkv_2d(tp, s, w.wr, w.wk, w.wv, w.wo, w.decay, w.bonus, orders, H, W);
}

// X_c = LN(MVC-Shift(X)); K then ReLU then V; sigmoid(R) gate; channel gate.
template <typename T>
int channel_mix(Tape<T>& tp, int x, const TapedChannel& w, std::size_t H,
                std::size_t W, EcaCapture<T>* capture = nullptr) {
  int s = ag::mvc_shift(tp, x, w.shift.dw, w.shift.pw, H, W);
  int h = ag::layer_norm(tp, s, w.ln_gamma, w.ln_beta,
                         static_cast<T>(ModelConfig::kLnEps));
  int r = ag::linear(tp, h, w.wr);
  int k = ag::linear(tp, h, w.wk);
  int v = ag::linear(tp, ag::relu(tp, k), w.wv);
  int gated = ag::mul(tp, ag::sigmoid(tp, r), v);
  int out = ag::eca(tp, gated, w.eca);
  if (capture != nullptr) {
    capture->before.push_back(tp.value(gated));
    capture->after.push_back(tp.value(out));
  }
  return out;
}

template <typename T>
int rwkv2d_block(Tape<T>& tp, int x, const TapedBlock& w, int directions,
                 std::size_t H, std::size_t W, EcaCapture<T>* capture = nullptr) {
  int y = ag::add(tp, x, ag::spatial_mix(tp, x, w.spatial, directions, H, W));
  return ag::add(tp, y, ag::channel_mix(tp, y, w.channel, H, W, capture));
}

struct BackboneTrace {
  int tokens_in = -1;  // patch embedding output
  std::array<int, 4> stage_taps{-1, -1, -1, -1};
  int logits = -1;
};

template <typename T>
BackboneTrace backbone_forward(Tape<T>& tp, int image, const TapedBackbone& w,
                               const ModelConfig& cfg,
                               EcaCapture<T>* capture = nullptr) {
  const Tensor<T>& img = tp.value(image);
  check_shape(img.rank() == 3 && img.shape[0] == 3,
              "backbone: image must be [3,H,W]");
  check_config(img.shape[1] % cfg.patch_size == 0 &&
                   img.shape[2] % cfg.patch_size == 0,
               "backbone: image extents must be divisible by patch size");
  const std::size_t H = img.shape[1] / cfg.patch_size;
  const std::size_t W = img.shape[2] / cfg.patch_size;

  BackboneTrace trace;
  int patches = ag::gather_patches(tp, image, cfg.patch_size);
  int tok = ag::linear(tp, patches, w.patch_w, w.patch_b);
  trace.tokens_in = tok;
  std::size_t block_idx = 0;
  for (std::size_t stage = 0; stage < 4; ++stage) {
    for (std::size_t d = 0; d < cfg.stage_depths[stage]; ++d)
      tok = ag::rwkv2d_block(tp, tok, w.blocks[block_idx++], cfg.directions, H,
                             W, capture);
    trace.stage_taps[stage] = tok;
  }
  int pooled = ag::row_mean(tp, tok);
  trace.logits = ag::linear_vec(tp, pooled, w.head_w, w.head_b);
  return trace;
}

}  // namespace ag

// ---------------------------------------------------------------------------
// Pure (no-grad) entry points
// ---------------------------------------------------------------------------

// tokens, plus the token-grid extents.
template <typename T>
Tensor<T> patch_embed(const Tensor<T>& image, const Tensor<T>& weight,
                      const Tensor<T>& bias, std::size_t patch_size) {
  const Tensor<T> patches = ops::gather_patches(image, patch_size);
  check_shape(weight.shape[0] == patches.shape[1],
              "patch_embed: weight rows must equal 3*p*p");
  return ops::linear(patches, weight, &bias);
}

template <typename T>
Tensor<T> spatial_mix(const Tensor<T>& x, const SpatialMixWeights<T>& w,
                      std::size_t H, std::size_t W) {
  Tape<T> tp(false);
  int xid = tp.leaf(x);
  TapedSpatial s;
  s.ln_gamma = tp.leaf(w.ln_gamma);
  s.ln_beta = tp.leaf(w.ln_beta);
  s.shift = stage_mvc(tp, w.shift, false);
  s.wr = tp.leaf(w.attn.wr);
  s.wk = tp.leaf(w.attn.wk);
  s.wv = tp.leaf(w.attn.wv);
  s.wo = tp.leaf(w.attn.wo);
  s.decay = tp.leaf(w.attn.params.w);
  s.bonus = tp.leaf(w.attn.params.u);
  return tp.value(ag::spatial_mix(tp, xid, s, w.attn.directions, H, W));
}

template <typename T>
Tensor<T> channel_mix(const Tensor<T>& x, const ChannelMixWeights<T>& w,
                      std::size_t H, std::size_t W) {
  Tape<T> tp(false);
  int xid = tp.leaf(x);
  TapedChannel c;
  c.ln_gamma = tp.leaf(w.ln_gamma);
  c.ln_beta = tp.leaf(w.ln_beta);
  c.shift = stage_mvc(tp, w.shift, false);
  c.wr = tp.leaf(w.wr);
  c.wk = tp.leaf(w.wk);
  c.wv = tp.leaf(w.wv);
  c.eca = tp.leaf(w.eca_kernel);
  return tp.value(ag::channel_mix(tp, xid, c, H, W));
}

template <typename T>
Tensor<T> rwkv2d_block(const Tensor<T>& x, const BlockWeights<T>& w,
                       int directions, std::size_t H, std::size_t W) {
  Tape<T> tp(false);
  int xid = tp.leaf(x);
  TapedBlock tb;
  tb.spatial.ln_gamma = tp.leaf(w.spatial.ln_gamma);
  tb.spatial.ln_beta = tp.leaf(w.spatial.ln_beta);
  tb.spatial.shift = stage_mvc(tp, w.spatial.shift, false);
  tb.spatial.wr = tp.leaf(w.spatial.attn.wr);
  tb.spatial.wk = tp.leaf(w.spatial.attn.wk);
  tb.spatial.wv = tp.leaf(w.spatial.attn.wv);
  tb.spatial.wo = tp.leaf(w.spatial.attn.wo);
  tb.spatial.decay = tp.leaf(w.spatial.attn.params.w);
  tb.spatial.bonus = tp.leaf(w.spatial.attn.params.u);
  tb.channel.ln_gamma = tp.leaf(w.channel.ln_gamma);
  tb.channel.ln_beta = tp.leaf(w.channel.ln_beta);
  tb.channel.shift = stage_mvc(tp, w.channel.shift, false);
  tb.channel.wr = tp.leaf(w.channel.wr);
  tb.channel.wk = tp.leaf(w.channel.wk);
  tb.channel.wv = tp.leaf(w.channel.wv);
  tb.channel.eca = tp.leaf(w.channel.eca_kernel);
  return tp.value(ag::rwkv2d_block(tp, xid, tb, directions, H, W));
}

// Per-stage token tensors plus classifier logits.
template <typename T>
struct BlockOutput {
  std::array<Tensor<T>, 4> stage_tokens;
  Tensor<T> logits;
};

template <typename T>
BlockOutput<T> backbone_forward(const Tensor<T>& image,
                                const BackboneWeights<T>& weights,
                                EcaCapture<T>* capture = nullptr) {
  Tape<T> tp(false);
  int img = tp.leaf(image);
  TapedBackbone staged = stage_backbone(tp, weights, false);
  auto trace = ag::backbone_forward(tp, img, staged, weights.config, capture);
  BlockOutput<T> out;
  for (std::size_t s = 0; s < 4; ++s)
    out.stage_tokens[s] = tp.value(trace.stage_taps[s]);
  out.logits = tp.value(trace.logits);
  return out;
}

// |d probe / d pixel| map for one image, probe = sum over channels of the
// centre token's final-stage features. Returns [3, Himg, Wimg].
template <typename T>
Tensor<T> input_gradient(const Tensor<T>& image, const BackboneWeights<T>& weights) {
  Tape<T> tp(true);
  int img = tp.leaf(image, true);
  TapedBackbone staged = stage_backbone(tp, weights, false);
  auto trace = ag::backbone_forward(tp, img, staged, weights.config);
  const std::size_t H = image.shape[1] / weights.config.patch_size;
  const std::size_t W = image.shape[2] / weights.config.patch_size;
  const std::size_t centre = (H / 2) * W + W / 2;
  int probe = ag::sum_all(tp, ag::select_row(tp, trace.stage_taps[3], centre));
  tp.backward(probe);
  return tp.grad(img);
}

}  // namespace rsrwkv
