#include "rsrwkv/analysis.hpp"

#include "rsrwkv/io.hpp"

namespace rsrwkv::analysis {

std::size_t spatial_rkv_params(std::size_t C, int directions) {
  const std::size_t head = C / static_cast<std::size_t>(directions);
  return C * C + 2 * C * head;
}

ParamCounts count_params(const ModelConfig& cfg) {
  validate_config(cfg);
  const std::size_t C = cfg.embed_dim;
  const std::size_t head = C / static_cast<std::size_t>(cfg.directions);
  const std::size_t hidden = cfg.hidden_rate * C;
  const std::size_t keca = eca_kernel_size(C, cfg.eca_kernel);
  const std::size_t mvc = 3 * (9 * C + C * C);  // three dw 3x3 + three pw 1x1

  ParamCounts p;
  p.patch_embed = 3 * cfg.patch_size * cfg.patch_size * C + C;
  p.spatial_rkv = spatial_rkv_params(C, cfg.directions);
  p.spatial_total = 2 * C + mvc + p.spatial_rkv + C * C + 2 * head;
  p.channel_total = 2 * C + mvc + C * C + C * hidden + hidden * C + keca;
  p.blocks_total = cfg.depth_total() * (p.spatial_total + p.channel_total);
  p.head = C * cfg.num_classes + cfg.num_classes;
  p.total = p.patch_embed + p.blocks_total + p.head;
  return p;
}

std::size_t wkv_work(std::size_t tokens, std::size_t embed_dim) {
  return 6 * tokens * embed_dim;
}

FlopCounts count_flops(const ModelConfig& cfg, std::size_t img_h,
                       std::size_t img_w) {
  validate_config(cfg);
  check_config(img_h % cfg.patch_size == 0 && img_w % cfg.patch_size == 0,
               "count_flops: image extents must be divisible by patch size");
  const std::size_t C = cfg.embed_dim;
  const std::size_t head = C / static_cast<std::size_t>(cfg.directions);
  const std::size_t hidden = cfg.hidden_rate * C;
  const std::size_t keca = eca_kernel_size(C, cfg.eca_kernel);
  const std::size_t T = (img_h / cfg.patch_size) * (img_w / cfg.patch_size);

  const std::size_t patch = T * 3 * cfg.patch_size * cfg.patch_size * C + T * C;
  const std::size_t mvc = 3 * (9 * T * C + T * C * C) + 3 * T * C;
  const std::size_t spatial = 6 * T * C            // layer norm
                              + mvc                // token shift
                              + T * C * C          // R projection
                              + 2 * T * C * head   // K and V projections
                              + wkv_work(T, C)     // directional attention
                              + 2 * T * C          // sigmoid gate + multiply
                              + T * C * C;         // output projection
  const std::size_t channel = mvc                  // token shift
                              + 6 * T * C          // layer norm
                              + T * C * C          // R projection
                              + T * C * hidden     // K projection
                              + T * hidden         // relu
                              + T * hidden * C     // V projection
                              + 2 * T * C          // sigmoid gate + multiply
                              + 2 * T * C;         // gate pooling + scaling
  const std::size_t gate_fixed = C * keca + C;     // conv over pooled channels
  const std::size_t residuals = 2 * T * C;

  FlopCounts f;
  f.head = C * cfg.num_classes + cfg.num_classes;
  f.fixed = cfg.depth_total() * gate_fixed;
  f.total = patch +
            cfg.depth_total() * (spatial + channel + residuals) + f.fixed +
            T * C  // token pooling
            + f.head;
  return f;
}

std::string channel_stats_csv(const std::vector<double>& before,
                              const std::vector<double>& after) {
  std::string out = "channel,mean_abs_before,mean_abs_after\n";
  for (std::size_t c = 0; c < before.size(); ++c)
    out += io::fmt(c) + "," + io::fmt(before[c]) + "," + io::fmt(after[c]) + "\n";
  return out;
}

}  // namespace rsrwkv::analysis
