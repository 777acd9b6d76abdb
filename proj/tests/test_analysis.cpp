#include <doctest.h>

#include "rsrwkv/analysis.hpp"
#include "rsrwkv/model.hpp"
#include "rsrwkv/rng.hpp"
#include "rsrwkv/tape.hpp"
#include "rsrwkv/verify.hpp"
#include "test_util.hpp"

using namespace rsrwkv;

namespace {

ModelConfig default_cfg() {
  ModelConfig cfg;
  cfg.num_classes = 45;
  return cfg;  // patch 16, dim 192, depths 3,3,3,3, rate 2, dirs 4
}

ModelConfig toy_cfg() {
  ModelConfig cfg;
  cfg.patch_size = 8;
  cfg.embed_dim = 16;
  cfg.stage_depths = {1, 1, 1, 1};
  cfg.num_classes = 2;
  return cfg;
}

}  // namespace

TEST_CASE("projection subtotals across direction counts") {
  for (std::size_t C : {16u, 64u, 192u}) {
    CHECK(analysis::spatial_rkv_params(C, 1) == 3 * C * C);
    CHECK(analysis::spatial_rkv_params(C, 2) == 2 * C * C);
    CHECK(analysis::spatial_rkv_params(C, 4) == (3 * C * C) / 2);
  }
  CHECK(analysis::spatial_rkv_params(192, 4) == 55296);
}

TEST_CASE("parameter counts: default configuration") {
  const auto p = analysis::count_params(default_cfg());
  CHECK(p.patch_embed == 147648);
  CHECK(p.spatial_rkv == 55296);
  CHECK(p.head == 192 * 45 + 45);
  CHECK(p.total == 6263145);
  CHECK(p.total == p.patch_embed + p.blocks_total + p.head);
}

TEST_CASE("parameter count equals stored checkpoint values for any config") {
  for (int dirs : {1, 2, 4}) {
    ModelConfig cfg = toy_cfg();
    cfg.directions = dirs;
    cfg.hidden_rate = 3;
    const auto w = make_backbone<double>(cfg);
    CHECK(analysis::count_params(cfg).total == param_count(w));
  }
}

TEST_CASE("work count: toy config against an independent hand tally") {
  // p=8, C=16, T=16 (32x32 input), rate 2, 4 blocks, eca kernel 3:
  //   patch   16*192*16 + 16*16                          =  49408
  //   mvc     3*(9*256 + 16*256) + 3*256                 =  19968 per instance
  //   spatial 6*256 + 19968 + 4096 + 2*1024 + 6*256 + 2*256 + 4096 = 33792
  //   channel 19968 + 1536 + 4096 + 8192 + 512 + 8192 + 512 + 512  = 43520
  //   gate conv (fixed) 16*3 + 16 = 64 per block
  //   residuals 2*256 = 512; pooling 256; head 34
  //   total = 49408 + 4*(33792 + 43520 + 512) + 4*64 + 256 + 34 = 361250
  const auto f = analysis::count_flops(toy_cfg(), 32, 32);
  CHECK(f.total == 361250);
  CHECK(f.head == 34);
  CHECK(f.fixed == 256);
}

TEST_CASE("work scales linearly with token count outside the fixed parts") {
  const auto cfg = default_cfg();
  const auto base = analysis::count_flops(cfg, 224, 224);
  const auto doubled = analysis::count_flops(cfg, 448, 448);
  CHECK(doubled.body() == 4 * base.body());
  CHECK(doubled.head == base.head);
  CHECK(doubled.fixed == base.fixed);
}

TEST_CASE("default config work count is in the expected band") {
  const auto f = analysis::count_flops(default_cfg(), 224, 224);
  CHECK(f.total > 1'000'000'000u);
  CHECK(f.total < 1'700'000'000u);
}

TEST_CASE("erf report: point dependency") {
  // a map whose probe depends on exactly one pixel
  Tensor<double> g({4, 5});
  g.data[2 * 5 + 3] = 7.0;
  const auto rep = analysis::make_erf_report(g);
  CHECK(rep.grid.data[2 * 5 + 3] == 1.0);
  for (std::size_t i = 0; i < rep.grid.numel(); ++i)
    if (i != 2 * 5 + 3) CHECK(rep.grid.data[i] == 0.0);
  CHECK(rep.high_ratio == doctest::Approx(1.0 / 20.0));
}

TEST_CASE("erf report via a single linear model") {
  // centre output reads exactly one pixel through the tape
  Tensor<double> img({3, 2, 2});
  img.data.assign(12, 0.25);
  Tape<double> tp(true);
  int img_id = tp.leaf(img, true);
  int patches = ag::gather_patches(tp, img_id, 2);  // one token, 12 inputs
  Tensor<double> w({12, 1});
  w.data[5] = 2.0;  // channel 1, local pixel (0,1) -> grid pixel (0,1)
  int tok = ag::linear(tp, patches, tp.leaf(w));
  tp.backward(ag::sum_all(tp, ag::select_row(tp, tok, 0)));
  const auto& g = tp.grad(img_id);

  Tensor<double> acc({2, 2});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < 4; ++p)
      acc.data[p] += std::abs(g.data[c * 4 + p]);
  const auto rep = analysis::make_erf_report(acc);
  CHECK(rep.grid.data[1] == 1.0);
  CHECK(rep.grid.data[0] == 0.0);
  CHECK(rep.high_ratio == doctest::Approx(0.25));
}

TEST_CASE("erf contract on the untrained toy backbone") {
  auto w = init_backbone<double>(toy_cfg(), 21);
  Rng rng(91);
  std::vector<Tensor<double>> images{random_normal<double>(rng, {3, 32, 32}),
                                     random_normal<double>(rng, {3, 32, 32})};
  const auto rep = analysis::erf_map(w, images);
  double maxv = 0;
  for (double v : rep.grid.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    maxv = std::max(maxv, v);
  }
  CHECK(maxv == 1.0);
  CHECK(rep.high_ratio > 0.0);
  CHECK(rep.high_ratio <= 1.0);

  // bit-exact reproducibility
  const auto rep2 = analysis::erf_map(w, images);
  CHECK(rep.high_ratio == rep2.high_ratio);
  CHECK(rep.grid.data == rep2.grid.data);
}

TEST_CASE("erf: zero gradient is a degenerate report") {
  Tensor<double> zeros({3, 3});
  CHECK_THROWS_AS(analysis::make_erf_report(zeros), NumericError);
}

TEST_CASE("channel statistics") {
  Rng rng(92);
  auto before = random_normal<double>(rng, {10, 6});
  Tensor<double> after = before;
  for (auto& v : after.data) v *= 0.5;
  const auto s = analysis::channel_stats(before, after);
  for (std::size_t c = 0; c < 6; ++c)
    CHECK(s.after[c] == doctest::Approx(0.5 * s.before[c]).epsilon(1e-15));

  Tensor<double> z({4, 3});
  const auto zs = analysis::channel_stats(z, z);
  for (double v : zs.before) CHECK(v == 0.0);

  // direct mean-abs oracle
  for (std::size_t c = 0; c < 6; ++c) {
    double acc = 0;
    for (std::size_t t = 0; t < 10; ++t) acc += std::abs(before.at(t, c));
    CHECK(s.before[c] == doctest::Approx(acc / 10.0).epsilon(1e-15));
  }

  const auto csv = analysis::channel_stats_csv(s.before, s.after);
  CHECK(csv.rfind("channel,mean_abs_before,mean_abs_after\n", 0) == 0);

  Tensor<double> mismatched({4, 4});
  CHECK_THROWS_AS(analysis::channel_stats(z, mismatched), ShapeError);
}
