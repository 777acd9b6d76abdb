#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "rsrwkv/model.hpp"
#include "rsrwkv/rng.hpp"
#include "rsrwkv/tape.hpp"

namespace rsrwkv::train {

// Desk-scale training bounds.
inline constexpr std::size_t kMaxToyTokens = 256;
inline constexpr std::size_t kMaxToyChannels = 32;

inline ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.patch_size = 8;
  cfg.embed_dim = 16;
  cfg.stage_depths = {1, 1, 1, 1};
  cfg.hidden_rate = 2;
  cfg.directions = 4;
  cfg.num_classes = 2;
  return cfg;
}

inline void check_toy_bounds(const ModelConfig& cfg, std::size_t img_extent) {
  validate_config(cfg);
  check_config(cfg.embed_dim <= kMaxToyChannels,
               "toy trainer: embed dim exceeds toy bound");
  check_config(img_extent % cfg.patch_size == 0,
               "toy trainer: image extent must be divisible by patch size");
  const std::size_t side = img_extent / cfg.patch_size;
  check_config(side * side <= kMaxToyTokens,
               "toy trainer: token count exceeds toy bound");
}

template <typename T>
struct ToyDataset {
  std::vector<Tensor<T>> images;       // each [3, S, S]
  std::vector<std::size_t> labels;     // 0 or 1
};

// Two synthetic classes: low-frequency intensity ramps along the horizontal
// axis (class 0) or the vertical axis (class 1), plus per-pixel noise.
// Fully determined by the seed.
template <typename T>
ToyDataset<T> make_toy_dataset(std::uint64_t seed, std::size_t count,
                               std::size_t extent) {
  Rng rng(seed);
  ToyDataset<T> ds;
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t label = n % 2;
    const double offset = rng.uniform(0.15, 0.35);
    const double amp = rng.uniform(0.4, 0.6);
    Tensor<T> img({3, extent, extent});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < extent; ++i)
        for (std::size_t j = 0; j < extent; ++j) {
          const double ramp =
              static_cast<double>(label == 0 ? j : i) /
              static_cast<double>(extent - 1);
          double v = offset + amp * ramp + 0.05 * rng.normal();
          v = std::clamp(v, 0.0, 1.0);
          img.data[(c * extent + i) * extent + j] = static_cast<T>(v);
        }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

// Parameter ids in visit_params order, for zipping tape gradients with the
// weight tensors.
inline std::vector<int> taped_param_ids(const TapedBackbone& s) {
  std::vector<int> ids{s.patch_w, s.patch_b};
  for (const auto& blk : s.blocks) {
    ids.push_back(blk.spatial.ln_gamma);
    ids.push_back(blk.spatial.ln_beta);
    for (std::size_t i = 0; i < 3; ++i) {
      ids.push_back(blk.spatial.shift.dw[i]);
      ids.push_back(blk.spatial.shift.pw[i]);
    }
    ids.push_back(blk.spatial.wr);
    ids.push_back(blk.spatial.wk);
    ids.push_back(blk.spatial.wv);
    ids.push_back(blk.spatial.wo);
    ids.push_back(blk.spatial.decay);
    ids.push_back(blk.spatial.bonus);
    ids.push_back(blk.channel.ln_gamma);
    ids.push_back(blk.channel.ln_beta);
    for (std::size_t i = 0; i < 3; ++i) {
      ids.push_back(blk.channel.shift.dw[i]);
      ids.push_back(blk.channel.shift.pw[i]);
    }
    ids.push_back(blk.channel.wr);
    ids.push_back(blk.channel.wk);
    ids.push_back(blk.channel.wv);
    ids.push_back(blk.channel.eca);
  }
  ids.push_back(s.head_w);
  ids.push_back(s.head_b);
  return ids;
}

template <typename T>
struct TrainResult {
  std::vector<double> losses;  // mean cross-entropy before each update
  double final_loss = 0.0;     // after the last update
  double accuracy = 0.0;       // train accuracy after the last update
};

// Mean cross-entropy of the current weights over the dataset, no gradients.
template <typename T>
double toy_loss(const BackboneWeights<T>& w, const ToyDataset<T>& ds) {
  double total = 0;
  for (std::size_t n = 0; n < ds.images.size(); ++n) {
    const auto out = backbone_forward(ds.images[n], w);
    total += static_cast<double>(ops::cross_entropy(out.logits, ds.labels[n]));
  }
  return total / static_cast<double>(ds.images.size());
}

template <typename T>
double toy_accuracy(const BackboneWeights<T>& w, const ToyDataset<T>& ds) {
  std::size_t correct = 0;
  for (std::size_t n = 0; n < ds.images.size(); ++n) {
    const auto out = backbone_forward(ds.images[n], w);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < out.logits.numel(); ++k)
      if (out.logits.data[k] > out.logits.data[arg]) arg = k;
    if (arg == ds.labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.images.size());
}

// Plain full-batch gradient descent. The recorded loss at step s is
// evaluated before that step's update, so lr = 0 leaves it constant.
template <typename T>
TrainResult<T> train_toy(BackboneWeights<T>& w, const ToyDataset<T>& ds,
                         std::size_t steps, double lr) {
  check_usage(!ds.images.empty(), "toy trainer: empty dataset");
  check_toy_bounds(w.config, ds.images[0].shape[1]);
  TrainResult<T> result;
  const T batch_scale = T(1) / static_cast<T>(ds.images.size());
  for (std::size_t step = 0; step < steps; ++step) {
    Tape<T> tp(true);
    TapedBackbone staged = stage_backbone(tp, w, true);
    int loss = -1;
    for (std::size_t n = 0; n < ds.images.size(); ++n) {
      int img = tp.leaf(ds.images[n]);
      auto trace = ag::backbone_forward(tp, img, staged, w.config);
      int ce = ag::cross_entropy(tp, trace.logits, ds.labels[n]);
      loss = loss < 0 ? ce : ag::add(tp, loss, ce);
    }
    loss = ag::scale(tp, loss, batch_scale);
    result.losses.push_back(static_cast<double>(tp.value(loss).data[0]));
    tp.backward(loss);
    const auto ids = taped_param_ids(staged);
    std::size_t idx = 0;
    visit_params(w, [&](const std::string&, Tensor<T>& t) {
      const Tensor<T>& g = tp.grad(ids[idx++]);
      for (std::size_t i = 0; i < t.numel(); ++i)
        t.data[i] -= static_cast<T>(lr) * g.data[i];
    });
  }
  result.final_loss = toy_loss(w, ds);
  result.accuracy = toy_accuracy(w, ds);
  return result;
}

}  // namespace rsrwkv::train
