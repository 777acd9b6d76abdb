#include <doctest.h>

#include "rsrwkv/rng.hpp"
#include "rsrwkv/token_shift.hpp"
#include "rsrwkv/verify.hpp"
#include "test_util.hpp"

using namespace rsrwkv;
using testutil::check_close;
using testutil::check_equal;
using testutil::make;

namespace {

MvcShiftLayer<double> zero_layer(std::size_t C) {
  MvcShiftLayer<double> layer;
  for (std::size_t i = 0; i < 3; ++i) {
    layer.dw[i] = Tensor<double>({C, 3, 3});
    layer.pw[i] = Tensor<double>({C, C});
  }
  return layer;
}

MvcShiftLayer<double> random_layer(Rng& rng, std::size_t C, double scale) {
  MvcShiftLayer<double> layer;
  for (std::size_t i = 0; i < 3; ++i) {
    layer.dw[i] = random_normal<double>(rng, {C, 3, 3}, scale);
    layer.pw[i] = random_normal<double>(rng, {C, C}, scale);
  }
  return layer;
}

}  // namespace

TEST_CASE("mvc_shift: zero weights reduce to the residual") {
  Rng rng(61);
  auto x = random_normal<double>(rng, {12, 3});
  check_equal(mvc_shift(x, zero_layer(3), 3, 4), x);
}

TEST_CASE("mvc_shift: identity branch doubles the input") {
  const std::size_t C = 2;
  auto layer = zero_layer(C);
  for (std::size_t c = 0; c < C; ++c) {
    layer.dw[1].data[(c * 3 + 1) * 3 + 1] = 1.0;
    layer.pw[1].data[c * C + c] = 1.0;
  }
  Rng rng(62);
  auto x = random_normal<double>(rng, {6, C});
  auto y = mvc_shift(x, layer, 2, 3);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data[i] == doctest::Approx(2.0 * x.data[i]).epsilon(1e-15));
}

TEST_CASE("mvc_shift: matches the composed convolution oracles") {
  Rng rng(63);
  const std::size_t H = 5, W = 5, C = 4;
  auto layer = random_layer(rng, C, 0.3);
  auto x = random_normal<double>(rng, {H * W, C});
  auto got = mvc_shift(x, layer, H, W);

  auto chw = ops::tokens_to_chw(x, H, W);
  Tensor<double> acc = chw;
  for (std::size_t i = 0; i < 3; ++i) {
    auto conv = verify::oracle::depthwise_conv2d(chw, layer.dw[i],
                                                 static_cast<long>(i + 1));
    auto mixed = verify::oracle::pointwise_conv(conv, layer.pw[i]);
    for (std::size_t j = 0; j < acc.numel(); ++j) acc.data[j] += mixed.data[j];
  }
  check_close(got, ops::chw_to_tokens(acc), 1e-12);
}

TEST_CASE("mvc_shift is exactly linear in its input") {
  Rng rng(64);
  const std::size_t H = 4, W = 3, C = 3;
  auto layer = random_layer(rng, C, 0.4);
  auto x = random_normal<double>(rng, {H * W, C});
  auto y = random_normal<double>(rng, {H * W, C});
  Tensor<double> mix({H * W, C});
  for (std::size_t i = 0; i < mix.numel(); ++i)
    mix.data[i] = 1.7 * x.data[i] - 0.6 * y.data[i];
  auto lhs = mvc_shift(mix, layer, H, W);
  auto fx = mvc_shift(x, layer, H, W);
  auto fy = mvc_shift(y, layer, H, W);
  for (std::size_t i = 0; i < mix.numel(); ++i)
    CHECK(verify::rel_err(lhs.data[i], 1.7 * fx.data[i] - 0.6 * fy.data[i]) <=
          1e-12);
}

TEST_CASE("mvc_shift gradient vs finite differences, residual included") {
  Rng rng(65);
  const std::size_t H = 3, W = 3, C = 2;
  auto layer = random_layer(rng, C, 0.4);
  auto x = random_normal<double>(rng, {H * W, C});
  auto r = random_normal<double>(rng, {H * W, C});

  Tape<double> tp(true);
  int xid = tp.leaf(x, true);
  std::array<int, 3> dw{}, pw{};
  for (std::size_t i = 0; i < 3; ++i) {
    dw[i] = tp.leaf(layer.dw[i], true);
    pw[i] = tp.leaf(layer.pw[i], true);
  }
  int out = ag::mvc_shift(tp, xid, dw, pw, H, W);
  tp.backward(ag::sum_all(tp, ag::mul(tp, out, tp.leaf(r))));

  auto eval = [&]() {
    auto y = mvc_shift(x, layer, H, W);
    double acc = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) acc += y.data[i] * r.data[i];
    return acc;
  };
  CHECK(verify::fd_check(x, tp.grad(xid), eval, 1e-5) <= 1e-6);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(verify::fd_check(layer.dw[i], tp.grad(dw[i]), eval, 1e-5) <= 1e-6);
    CHECK(verify::fd_check(layer.pw[i], tp.grad(pw[i]), eval, 1e-5) <= 1e-6);
  }
}

TEST_CASE("mvc_shift support is the 7x7 neighborhood") {
  Rng rng(66);
  const std::size_t H = 9, W = 9, C = 2;
  auto layer = random_layer(rng, C, 0.4);
  auto x = random_normal<double>(rng, {H * W, C});
  const auto base = mvc_shift(x, layer, H, W);
  Tensor<double> bumped = x;
  bumped.data[(4 * W + 4) * C + 1] += 0.75;
  const auto moved = mvc_shift(bumped, layer, H, W);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const long cheb = std::max(std::labs(static_cast<long>(i) - 4),
                                 std::labs(static_cast<long>(j) - 4));
      bool changed = false;
      for (std::size_t c = 0; c < C; ++c)
        if (moved.data[(i * W + j) * C + c] != base.data[(i * W + j) * C + c])
          changed = true;
      if (cheb > 3) CHECK(!changed);
    }
}

TEST_CASE("mvc_shift: token count must match the grid") {
  Rng rng(67);
  auto x = random_normal<double>(rng, {10, 2});
  CHECK_THROWS_AS(mvc_shift(x, zero_layer(2), 3, 4), ShapeError);
}

TEST_CASE("q_shift: borders, mu endpoints, neighbor table") {
  Rng rng(68);
  auto x1 = random_normal<double>(rng, {1, 4});
  auto mu = random_uniform<double>(rng, {4}, 0.2, 0.8);
  auto y1 = q_shift(x1, 1, 1, &mu);
  for (std::size_t c = 0; c < 4; ++c)
    CHECK(y1.data[c] == doctest::Approx(mu.data[c] * x1.data[c]));

  Tensor<double> ones_mu({4}, 1.0);
  auto x = random_normal<double>(rng, {6, 4});
  check_equal(q_shift(x, 2, 3, &ones_mu), x);

  // constant field with mu anything: shifted part equals x except at borders
  Tensor<double> constant({9, 4}, 2.0);
  Tensor<double> half({4}, 0.5);
  auto yc = q_shift(constant, 3, 3, &half);
  // centre token has all four neighbors in bounds: 0.5*2 + 0.5*2 = 2
  for (std::size_t c = 0; c < 4; ++c) CHECK(yc.data[4 * 4 + c] == 2.0);

  // 2x2 grid, one channel per quarter, distinct values
  Tensor<double> grid({4, 4});
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 4; ++c)
      grid.data[t * 4 + c] = static_cast<double>(1 + t);
  Tensor<double> quarter_mu({4}, 0.0);  // pure neighbor values
  auto yq = q_shift(grid, 2, 2, &quarter_mu);
  // quarters: 0 = up, 1 = down, 2 = left, 3 = right
  CHECK(yq.at(0, 0) == 0.0);  // (0,0) has no up neighbor
  CHECK(yq.at(0, 1) == 3.0);  // below (0,0) sits token 2 (value 3)
  CHECK(yq.at(0, 2) == 0.0);  // no left neighbor
  CHECK(yq.at(0, 3) == 2.0);  // right neighbor is token 1 (value 2)
  CHECK(yq.at(3, 0) == 2.0);  // above (1,1) sits token 1
  CHECK(yq.at(3, 1) == 0.0);
  CHECK(yq.at(3, 2) == 3.0);  // left of (1,1) sits token 2
  CHECK(yq.at(3, 3) == 0.0);

  Tensor<double> bad({4, 6});
  CHECK_THROWS_AS(q_shift(bad, 2, 2), ConfigError);  // 6 % 4 != 0
}

TEST_CASE("lerp_shift endpoints and formula") {
  Rng rng(69);
  auto x = random_normal<double>(rng, {7, 3});
  Tensor<double> one({3}, 1.0), zero({3}, 0.0);
  check_equal(lerp_shift(x, one), x);

  auto delayed = lerp_shift(x, zero);
  for (std::size_t c = 0; c < 3; ++c) CHECK(delayed.at(0, c) == 0.0);
  for (std::size_t t = 1; t < 7; ++t)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(delayed.at(t, c) == x.at(t - 1, c));

  auto mu = random_uniform<double>(rng, {3}, 0.0, 1.0);
  auto y = lerp_shift(x, mu);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t c = 0; c < 3; ++c) {
      const double prev = t == 0 ? 0.0 : x.at(t - 1, c);
      CHECK(verify::rel_err(y.at(t, c), mu.data[c] * x.at(t, c) +
                                            (1.0 - mu.data[c]) * prev) <= 1e-15);
    }
}
