#include <doctest.h>

#include <cmath>

#include "rsrwkv/analysis.hpp"
#include "rsrwkv/model.hpp"
#include "rsrwkv/rng.hpp"
#include "rsrwkv/train.hpp"
#include "rsrwkv/verify.hpp"
#include "test_util.hpp"

using namespace rsrwkv;
using testutil::check_close;
using testutil::check_equal;
using testutil::make;

namespace {

ModelConfig toy_cfg() {
  ModelConfig cfg;
  cfg.patch_size = 8;
  cfg.embed_dim = 16;
  cfg.stage_depths = {1, 1, 1, 1};
  cfg.hidden_rate = 2;
  cfg.directions = 4;
  cfg.num_classes = 2;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig cfg = toy_cfg();
  validate_config(cfg);
  cfg.directions = 3;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = toy_cfg();
  cfg.embed_dim = 18;  // not divisible by 4
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = toy_cfg();
  cfg.eca_kernel = 4;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("adaptive channel-gate kernel size") {
  CHECK(eca_kernel_size(192, 0) == 5);
  CHECK(eca_kernel_size(16, 0) == 3);
  CHECK(eca_kernel_size(1, 0) == 1);
  CHECK(eca_kernel_size(192, 7) == 7);
  CHECK_THROWS_AS(eca_kernel_size(192, 4), ConfigError);
}

TEST_CASE("patch embedding: shape arithmetic and zero propagation") {
  ModelConfig cfg = toy_cfg();
  cfg.patch_size = 16;
  auto w = make_backbone<double>(cfg);
  Tensor<double> img({3, 32, 32});
  auto tokens = patch_embed(img, w.patch_w, w.patch_b, 16);  // 32/16 = 2
  CHECK(tokens.shape == std::vector<std::size_t>{4, 16});
  for (double v : tokens.data) CHECK(v == 0.0);

  Tensor<double> odd({3, 33, 32});
  CHECK_THROWS_AS(patch_embed(odd, w.patch_w, w.patch_b, 16), ConfigError);
}

TEST_CASE("patch embedding matches gather + matmul oracle") {
  Rng rng(71);
  auto img = random_normal<double>(rng, {3, 8, 8});
  auto w = random_normal<double>(rng, {48, 6}, 0.5);
  auto b = random_normal<double>(rng, {6});
  auto got = patch_embed(img, w, b, 4);
  const auto patches = ops::gather_patches(img, 4);
  auto expect = verify::oracle::matmul(patches, w);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t o = 0; o < 6; ++o)
      CHECK(got.at(t, o) ==
            doctest::Approx(expect.at(t, o) + b.data[o]).epsilon(1e-12));
}

TEST_CASE("eca examples") {
  Rng rng(72);
  auto x = random_normal<double>(rng, {6, 8});

  SUBCASE("zero kernel halves") {
    auto y = eca(x, Tensor<double>({3}));
    for (std::size_t i = 0; i < x.numel(); ++i)
      CHECK(y.data[i] == doctest::Approx(0.5 * x.data[i]).epsilon(1e-15));
  }
  SUBCASE("saturated gate is the identity within 1e-6") {
    Tensor<double> pos({6, 8});
    for (auto& v : pos.data) v = std::abs(rng.normal()) + 0.5;
    Tensor<double> kern({3});
    kern.data[1] = 50.0;
    check_close(eca(pos, kern), pos, 1e-6);
  }
  SUBCASE("matches the direct two-line oracle") {
    auto kern = random_normal<double>(rng, {5});
    auto y = eca(x, kern);
    std::vector<double> pooled(8, 0.0);
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t c = 0; c < 8; ++c) pooled[c] += x.at(t, c) / 6.0;
    for (std::size_t c = 0; c < 8; ++c) {
      double z = 0;
      for (int j = -2; j <= 2; ++j) {
        const long s = static_cast<long>(c) + j;
        if (s < 0 || s >= 8) continue;
        z += kern.data[static_cast<std::size_t>(j + 2)] *
             pooled[static_cast<std::size_t>(s)];
      }
      const double gate = 1.0 / (1.0 + std::exp(-z));
      for (std::size_t t = 0; t < 6; ++t)
        CHECK(verify::rel_err(y.at(t, c), gate * x.at(t, c)) <= 1e-15);
    }
  }
  SUBCASE("even kernel rejected") {
    CHECK_THROWS_AS(eca(x, Tensor<double>({4})), ConfigError);
  }
}

TEST_CASE("channel mix with the gate forced to 1 reduces to the formula") {
  // non-negative value path plus a saturated centre-delta gate kernel
  Rng rng(78);
  const std::size_t C = 4, H = 3, W = 3;
  ChannelMixWeights<double> w;
  w.ln_gamma = Tensor<double>({C}, 1.0);
  w.ln_beta = Tensor<double>({C});
  for (std::size_t i = 0; i < 3; ++i) {
    w.shift.dw[i] = random_normal<double>(rng, {C, 3, 3}, 0.3);
    w.shift.pw[i] = random_normal<double>(rng, {C, C}, 0.3);
  }
  w.wr = Tensor<double>({C, C});  // sigma(0) = 0.5 everywhere
  w.wk = random_normal<double>(rng, {C, 2 * C});
  w.wv = random_normal<double>(rng, {2 * C, C});
  for (auto& v : w.wk.data) v = std::abs(v);
  for (auto& v : w.wv.data) v = std::abs(v);
  w.eca_kernel = Tensor<double>({3});
  w.eca_kernel.data[1] = 50.0;  // saturates on positive-mean channels

  auto x = random_normal<double>(rng, {H * W, C});
  const auto got = channel_mix(x, w, H, W);

  const auto xc = ops::layer_norm(mvc_shift(x, w.shift, H, W), w.ln_gamma,
                                  w.ln_beta, ModelConfig::kLnEps);
  const auto kc = verify::oracle::matmul(xc, w.wk);
  Tensor<double> relu_k = kc;
  for (auto& v : relu_k.data) v = v > 0 ? v : 0;
  const auto vc = verify::oracle::matmul(relu_k, w.wv);  // entrywise >= 0
  // gate formula with attn == 1: sigma(R_c) * V_c = 0.5 * V_c
  double worst = 0;
  for (std::size_t i = 0; i < got.numel(); ++i)
    worst = std::max(worst, verify::rel_err(got.data[i], 0.5 * vc.data[i]));
  CHECK(worst <= 1e-6);
}

TEST_CASE("stage taps sit at the cumulative depth boundaries") {
  ModelConfig cfg = toy_cfg();
  cfg.embed_dim = 8;
  cfg.stage_depths = {1, 2, 1, 1};
  auto w = init_backbone<double>(cfg, 404);
  Rng rng(73);
  auto img = random_normal<double>(rng, {3, 16, 16});  // 2x2 token grid
  const auto out = backbone_forward(img, w);

  auto tok = patch_embed(img, w.patch_w, w.patch_b, cfg.patch_size);
  std::size_t block = 0;
  for (std::size_t stage = 0; stage < 4; ++stage) {
    for (std::size_t d = 0; d < cfg.stage_depths[stage]; ++d)
      tok = rwkv2d_block(tok, w.blocks[block++], cfg.directions, 2, 2);
    check_equal(out.stage_tokens[stage], tok);
  }
  CHECK(block == 5);
  for (const auto& tap : out.stage_tokens)
    CHECK(tap.shape == out.stage_tokens[0].shape);
}

TEST_CASE("same seed gives identical weights; different seeds differ") {
  const auto a = init_backbone<double>(toy_cfg(), 9);
  const auto b = init_backbone<double>(toy_cfg(), 9);
  const auto c = init_backbone<double>(toy_cfg(), 10);
  CHECK(a.patch_w.data == b.patch_w.data);
  CHECK(a.blocks[2].channel.wk.data == b.blocks[2].channel.wk.data);
  CHECK(a.patch_w.data != c.patch_w.data);
  // decay spread is deterministic and ordered
  CHECK(a.blocks[0].spatial.attn.params.w.data[0] == -1.0);
  CHECK(a.blocks[0].spatial.attn.params.w.data[3] == 1.0);
}

TEST_CASE("taped forward and pure forward agree bit-exactly") {
  auto cfg = toy_cfg();
  auto w = init_backbone<double>(cfg, 11);
  Rng rng(74);
  auto img = random_normal<double>(rng, {3, 32, 32});

  const auto pure = backbone_forward(img, w);

  Tape<double> tp(true);
  int img_id = tp.leaf(img, true);
  TapedBackbone staged = stage_backbone(tp, w, true);
  auto trace = ag::backbone_forward(tp, img_id, staged, cfg);
  check_equal(tp.value(trace.logits), pure.logits);
  check_equal(tp.value(trace.stage_taps[3]), pure.stage_tokens[3]);
}

TEST_CASE("channel gate capture feeds the stats report") {
  auto cfg = toy_cfg();
  auto w = init_backbone<double>(cfg, 12);
  Rng rng(75);
  auto img = random_normal<double>(rng, {3, 32, 32});
  EcaCapture<double> capture;
  backbone_forward(img, w, &capture);
  REQUIRE(capture.before.size() == cfg.depth_total());
  REQUIRE(capture.after.size() == cfg.depth_total());
  const auto stats = analysis::channel_stats(capture.before[3], capture.after[3]);
  CHECK(stats.before.size() == cfg.embed_dim);
  // the gate is strictly contractive per channel: |after| <= |before|
  for (std::size_t c = 0; c < stats.before.size(); ++c)
    CHECK(stats.after[c] <= stats.before[c] + 1e-15);
}

TEST_CASE("spatial mix propagates shape errors") {
  auto cfg = toy_cfg();
  auto w = init_backbone<double>(cfg, 13);
  Rng rng(76);
  auto x = random_normal<double>(rng, {15, 16});
  CHECK_THROWS_AS(spatial_mix(x, w.blocks[0].spatial, 4, 4), ShapeError);
}

TEST_CASE("narrow backbone end-to-end gradient vs finite differences") {
  // loss = sum of logits; every parameter checked on a narrow variant (the
  // acceptance suite repeats this at full toy width)
  ModelConfig cfg = toy_cfg();
  cfg.embed_dim = 8;
  auto w = init_backbone<double>(cfg, 14);
  Rng rng(77);
  auto img = random_normal<double>(rng, {3, 16, 16});  // T = 4

  Tape<double> tp(true);
  int img_id = tp.leaf(img);
  TapedBackbone staged = stage_backbone(tp, w, true);
  auto trace = ag::backbone_forward(tp, img_id, staged, cfg);
  tp.backward(ag::sum_all(tp, trace.logits));

  auto eval = [&]() {
    const auto out = backbone_forward(img, w);
    double acc = 0;
    for (double v : out.logits.data) acc += v;
    return acc;
  };

  const auto ids = train::taped_param_ids(staged);
  std::size_t idx = 0;
  visit_params(w, [&](const std::string& name, Tensor<double>& t) {
    const Tensor<double> analytic = tp.grad(ids[idx++]);
    const double err = verify::fd_check(t, analytic, eval, 1e-5);
    CAPTURE(name);
    CHECK(err <= 1e-5);
  });
}
