#include "rsrwkv/verify.hpp"

#include <cmath>

#include "rsrwkv/analysis.hpp"
#include "rsrwkv/io.hpp"
#include "rsrwkv/model.hpp"
#include "rsrwkv/rng.hpp"
#include "rsrwkv/scan2d.hpp"
#include "rsrwkv/token_shift.hpp"

namespace rsrwkv::verify {

namespace {

Row row(std::string suite, std::string name, std::size_t count, double err,
        double tol) {
  return Row{std::move(suite), std::move(name), count, err, err <= tol};
}

Row exact_row(std::string suite, std::string name, std::size_t count,
              double err) {
  return Row{std::move(suite), std::move(name), count, err, err == 0.0};
}

template <typename T>
wkv::WkvParams<T> random_params(Rng& rng, std::size_t C) {
  wkv::WkvParams<T> p{Tensor<T>({C}), Tensor<T>({C})};
  for (auto& v : p.w.data) v = static_cast<T>(rng.normal());
  for (auto& v : p.u.data) v = static_cast<T>(rng.normal());
  return p;
}

template <typename T>
Tensor<T> reversed_rows(const Tensor<T>& x) {
  const std::size_t Tn = x.shape[0], C = x.shape[1];
  Tensor<T> y({Tn, C});
  for (std::size_t t = 0; t < Tn; ++t)
    for (std::size_t c = 0; c < C; ++c)
      y.data[t * C + c] = x.data[(Tn - 1 - t) * C + c];
  return y;
}

double bitwise_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

// --------------------------------------------------------------------------
// kernel suite
// --------------------------------------------------------------------------

std::vector<Row> suite_kernel(std::uint64_t seed) {
  std::vector<Row> rows;
  Rng rng(seed);

  {  // T=1: single-term ratio, exact
    auto k = random_normal<double>(rng, {1, 4});
    auto v = random_normal<double>(rng, {1, 4});
    auto p = random_params<double>(rng, 4);
    double err = std::max(bitwise_diff(wkv::wkv_causal(k, v, p), v),
                          bitwise_diff(wkv::bi_wkv_scan(k, v, p), v));
    err = std::max(err, bitwise_diff(wkv::bi_wkv_oracle(k, v, p), v));
    rows.push_back(exact_row("kernel", "t1_returns_v", 3, err));
  }

  {  // constant values survive any weighting
    auto k = random_normal<double>(rng, {12, 4});
    Tensor<double> v({12, 4}, 3.0);
    auto p = random_params<double>(rng, 4);
    double err = std::max(max_rel_err(wkv::wkv_causal(k, v, p), v),
                          max_rel_err(wkv::bi_wkv_scan(k, v, p), v));
    rows.push_back(row("kernel", "constant_values", 2, err, 1e-12));
  }

  {  // causal kernel vs direct summation
    double worst = 0;
    const std::size_t n = 40;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t T = 1 + rng.index(64), C = 1 + rng.index(16);
      auto k = random_normal<double>(rng, {T, C});
      auto v = random_normal<double>(rng, {T, C});
      auto p = random_params<double>(rng, C);
      worst = std::max(worst, max_rel_err(wkv::wkv_causal(k, v, p),
                                          oracle::wkv_causal_direct(k, v, p)));
    }
    rows.push_back(row("kernel", "causal_vs_direct_sum", n, worst, 1e-12));
  }

  {  // linear scan vs quadratic ground truth, f64
    double worst = 0;
    const std::size_t n = 60;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t T = 1 + rng.index(64), C = 1 + rng.index(16);
      auto k = random_normal<double>(rng, {T, C});
      auto v = random_normal<double>(rng, {T, C});
      auto p = random_params<double>(rng, C);
      worst = std::max(worst, max_rel_err(wkv::bi_wkv_scan(k, v, p),
                                          wkv::bi_wkv_oracle(k, v, p)));
    }
    rows.push_back(row("kernel", "bi_scan_vs_oracle_f64", n, worst, 1e-12));
  }

  {  // same comparison at f32
    double worst = 0;
    const std::size_t n = 40;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t T = 1 + rng.index(64), C = 1 + rng.index(16);
      auto k = random_normal<float>(rng, {T, C});
      auto v = random_normal<float>(rng, {T, C});
      wkv::WkvParams<float> p{random_normal<float>(rng, {C}),
                              random_normal<float>(rng, {C})};
      worst = std::max(worst, max_rel_err(wkv::bi_wkv_scan(k, v, p),
                                          wkv::bi_wkv_oracle(k, v, p)));
    }
    rows.push_back(row("kernel", "bi_scan_vs_oracle_f32", n, worst, 1e-5));
  }

  {  // one huge key entry must not overflow
    auto k = random_normal<double>(rng, {24, 4});
    auto v = random_normal<double>(rng, {24, 4});
    auto p = random_params<double>(rng, 4);
    k.data[5 * 4 + 2] = 80.0;
    auto scan = wkv::bi_wkv_scan(k, v, p);
    double err = all_finite(scan)
                     ? max_rel_err(scan, wkv::bi_wkv_oracle(k, v, p))
                     : 1.0;
    rows.push_back(row("kernel", "bi_huge_key_stable", 1, err, 1e-9));
  }

  {  // dominant-bonus limit: output collapses to v
    auto k = random_normal<double>(rng, {8, 4});
    auto v = random_normal<double>(rng, {8, 4});
    auto p = random_params<double>(rng, 4);
    for (auto& u : p.u.data) u = 50.0;
    double err = std::max(max_rel_err(wkv::bi_wkv_oracle(k, v, p), v),
                          max_rel_err(wkv::bi_wkv_scan(k, v, p), v));
    rows.push_back(row("kernel", "bi_bonus_dominates", 2, err, 1e-8));
  }

  {  // T=2, all weights equal -> plain average
    Tensor<double> k({2, 1}), v({2, 1});
    v.data = {0.0, 1.0};
    wkv::WkvParams<double> p{Tensor<double>({1}), Tensor<double>({1})};
    auto out = wkv::bi_wkv_scan(k, v, p);
    double err = std::max(rel_err(out.data[0], 0.5), rel_err(out.data[1], 0.5));
    rows.push_back(row("kernel", "bi_t2_uniform_average", 1, err, 1e-15));
  }

  {  // outputs stay inside the per-channel value envelope
    double worst = 0;
    const std::size_t n = 40;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t T = 1 + rng.index(32), C = 1 + rng.index(8);
      auto k = random_normal<double>(rng, {T, C});
      auto v = random_normal<double>(rng, {T, C});
      auto p = random_params<double>(rng, C);
      auto check_envelope = [&](const Tensor<double>& out) {
        for (std::size_t c = 0; c < C; ++c) {
          double lo = v.data[c], hi = v.data[c];
          for (std::size_t t = 1; t < T; ++t) {
            lo = std::min(lo, v.data[t * C + c]);
            hi = std::max(hi, v.data[t * C + c]);
          }
          for (std::size_t t = 0; t < T; ++t) {
            const double y = out.data[t * C + c];
            const double breach = std::max(lo - y, y - hi);
            if (breach > 0) worst = std::max(worst, rel_err(y, y + breach));
          }
        }
      };
      check_envelope(wkv::bi_wkv_scan(k, v, p));
      check_envelope(wkv::wkv_causal(k, v, p));
    }
    rows.push_back(row("kernel", "convexity_envelope", n, worst, 1e-12));
  }

  {  // reversing the token order reverses the output exactly
    double worst = 0;
    const std::size_t n = 20;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t T = 1 + rng.index(32), C = 1 + rng.index(8);
      auto k = random_normal<double>(rng, {T, C});
      auto v = random_normal<double>(rng, {T, C});
      auto p = random_params<double>(rng, C);
      auto fwd = wkv::bi_wkv_scan(k, v, p);
      auto rev = wkv::bi_wkv_scan(reversed_rows(k), reversed_rows(v), p);
      worst = std::max(worst, bitwise_diff(rev, reversed_rows(fwd)));
    }
    rows.push_back(exact_row("kernel", "reversal_covariance_exact", n, worst));
  }

  {  // analytic backward vs central differences
    double worst = 0;
    const std::size_t n = 6;
    for (std::size_t i = 0; i < n; ++i) {
      auto k = random_normal<double>(rng, {8, 3});
      auto v = random_normal<double>(rng, {8, 3});
      auto p = random_params<double>(rng, 3);
      auto r = random_normal<double>(rng, {8, 3});
      auto g = wkv::bi_wkv_backward(k, v, p, r);
      auto eval = [&]() {
        auto out = wkv::bi_wkv_scan(k, v, p);
        double acc = 0;
        for (std::size_t j = 0; j < out.numel(); ++j)
          acc += out.data[j] * r.data[j];
        return acc;
      };
      worst = std::max(worst, fd_check(k, g.gk, eval, 1e-5));
      worst = std::max(worst, fd_check(v, g.gv, eval, 1e-5));
      worst = std::max(worst, fd_check(p.w, g.gw, eval, 1e-5));
      worst = std::max(worst, fd_check(p.u, g.gu, eval, 1e-5));
    }
    rows.push_back(row("kernel", "bi_backward_vs_fd", n, worst, 1e-6));
  }

  {  // value-gradient column sums equal grad_out column sums
    auto k = random_normal<double>(rng, {10, 3});
    Tensor<double> v({10, 3}, 3.0);
    auto p = random_params<double>(rng, 3);
    auto gy = random_normal<double>(rng, {10, 3});
    auto g = wkv::bi_wkv_backward(k, v, p, gy);
    double worst = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      double sum_gv = 0, sum_gy = 0;
      for (std::size_t t = 0; t < 10; ++t) {
        sum_gv += g.gv.data[t * 3 + c];
        sum_gy += gy.data[t * 3 + c];
      }
      worst = std::max(worst, rel_err(sum_gv, sum_gy));
    }
    rows.push_back(row("kernel", "backward_value_mass", 3, worst, 1e-12));
  }

  {  // zero upstream gradient annihilates every gradient
    auto k = random_normal<double>(rng, {6, 2});
    auto v = random_normal<double>(rng, {6, 2});
    auto p = random_params<double>(rng, 2);
    Tensor<double> gy({6, 2});
    auto g = wkv::bi_wkv_backward(k, v, p, gy);
    double err = 0;
    for (const Tensor<double>* t : {&g.gk, &g.gv, &g.gw, &g.gu})
      for (double x : t->data) err = std::max(err, std::abs(x));
    rows.push_back(exact_row("kernel", "backward_zero_grad_out", 4, err));
  }

  return rows;
}

// --------------------------------------------------------------------------
// scan suite
// --------------------------------------------------------------------------

std::vector<Row> suite_scan(std::uint64_t seed) {
  std::vector<Row> rows;
  Rng rng(seed);

  {  // forward/inverse compose to identity for every small grid
    std::size_t checked = 0;
    bool ok = true;
    for (std::size_t H = 1; H <= 9; ++H)
      for (std::size_t W = 1; W <= 9; ++W) {
        for (const auto& o : build_scan_orders(H, W)) {
          ++checked;
          std::vector<bool> seen(H * W, false);
          for (std::size_t g = 0; g < H * W; ++g) {
            const int s = o.fwd[g];
            if (s < 0 || s >= static_cast<int>(H * W) ||
                o.inv[static_cast<std::size_t>(s)] != static_cast<int>(g))
              ok = false;
            if (seen[static_cast<std::size_t>(s)]) ok = false;
            seen[static_cast<std::size_t>(s)] = true;
          }
        }
      }
    rows.push_back(exact_row("scan", "inverse_identity_all_grids", checked,
                             ok ? 0.0 : 1.0));
  }

  {  // 2x2 anti-diagonal order enumerated by hand
    const auto orders = build_scan_orders(2, 2);
    const std::vector<int> expect{0, 2, 1, 3};
    bool ok = orders[2].inv == expect;
    rows.push_back(exact_row("scan", "anti_diag_2x2", 1, ok ? 0.0 : 1.0));
  }

  {  // single-row grids: three identity orders, main diagonal reversed
    const auto orders = build_scan_orders(1, 7);
    bool ok = true;
    for (std::size_t idx : {0u, 1u, 2u})
      for (std::size_t g = 0; g < 7; ++g)
        if (orders[idx].fwd[g] != static_cast<int>(g)) ok = false;
    for (std::size_t g = 0; g < 7; ++g)
      if (orders[3].fwd[g] != static_cast<int>(6 - g)) ok = false;
    rows.push_back(exact_row("scan", "single_row_degeneracy", 4, ok ? 0.0 : 1.0));
  }

  {  // on a 1-row grid every head equals the plain 1-D kernel, exactly
    auto k = random_normal<double>(rng, {6, 2});
    auto v = random_normal<double>(rng, {6, 2});
    auto p = random_params<double>(rng, 2);
    const auto base = wkv::bi_wkv_scan(k, v, p);
    double worst = 0;
    for (const auto& o : build_scan_orders(1, 6))
      worst = std::max(worst, bitwise_diff(directional_head(k, v, p, o), base));
    rows.push_back(exact_row("scan", "row_grid_heads_collapse", 4, worst));
  }

  {  // full layer vs a composition of oracle pieces
    double worst = 0;
    const std::size_t n = 5;
    for (std::size_t inst = 0; inst < n; ++inst) {
      const std::size_t H = 4, W = 4, C = 8, head = C / 4;
      Wkv2dLayer<double> layer;
      layer.directions = 4;
      layer.wr = random_normal<double>(rng, {C, C}, 0.2);
      layer.wk = random_normal<double>(rng, {C, head}, 0.2);
      layer.wv = random_normal<double>(rng, {C, head}, 0.2);
      layer.wo = random_normal<double>(rng, {C, C}, 0.2);
      layer.params = random_params<double>(rng, head);
      auto x = random_normal<double>(rng, {H * W, C});

      const auto got = wkv_2d(x, layer, H, W);

      const auto r = oracle::matmul(x, layer.wr);
      const auto kk = oracle::matmul(x, layer.wk);
      const auto vv = oracle::matmul(x, layer.wv);
      Tensor<double> cat({H * W, C});
      const auto orders = build_scan_orders(H, W);
      for (std::size_t d = 0; d < 4; ++d) {
        Tensor<double> ks({H * W, head}), vs({H * W, head});
        for (std::size_t s = 0; s < H * W; ++s)
          for (std::size_t c = 0; c < head; ++c) {
            ks.data[s * head + c] =
                kk.data[static_cast<std::size_t>(orders[d].inv[s]) * head + c];
            vs.data[s * head + c] =
                vv.data[static_cast<std::size_t>(orders[d].inv[s]) * head + c];
          }
        const auto y = wkv::bi_wkv_oracle(ks, vs, layer.params);
        for (std::size_t g = 0; g < H * W; ++g)
          for (std::size_t c = 0; c < head; ++c)
            cat.data[g * C + d * head + c] =
                y.data[static_cast<std::size_t>(orders[d].fwd[g]) * head + c];
      }
      Tensor<double> gated({H * W, C});
      for (std::size_t i = 0; i < gated.numel(); ++i)
        gated.data[i] = cat.data[i] / (1.0 + std::exp(-r.data[i]));
      const auto expect = oracle::matmul(gated, layer.wo);
      worst = std::max(worst, max_rel_err(got, expect));
    }
    rows.push_back(row("scan", "layer_vs_oracle_composition", n, worst, 1e-12));
  }

  {  // transpose swaps the horizontal and vertical heads exactly
    const std::size_t H = 3, W = 5, C = 2;
    auto k = random_normal<double>(rng, {H * W, C});
    auto v = random_normal<double>(rng, {H * W, C});
    auto p = random_params<double>(rng, C);
    auto transpose_grid = [&](const Tensor<double>& x) {
      Tensor<double> y({W * H, C});
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
          for (std::size_t c = 0; c < C; ++c)
            y.data[(j * H + i) * C + c] = x.data[(i * W + j) * C + c];
      return y;
    };
    const auto orders = build_scan_orders(H, W);
    const auto orders_t = build_scan_orders(W, H);
    const auto kt = transpose_grid(k), vt = transpose_grid(v);
    double worst = bitwise_diff(directional_head(kt, vt, p, orders_t[0]),
                                transpose_grid(directional_head(k, v, p, orders[1])));
    worst = std::max(worst,
                     bitwise_diff(directional_head(kt, vt, p, orders_t[1]),
                                  transpose_grid(directional_head(k, v, p, orders[0]))));
    rows.push_back(exact_row("scan", "transpose_swaps_h_v", 2, worst));
  }

  {  // quarter-turn rotations swap the two diagonal heads exactly
    const std::size_t H = 3, W = 5, C = 2;
    auto k = random_normal<double>(rng, {H * W, C});
    auto v = random_normal<double>(rng, {H * W, C});
    auto p = random_params<double>(rng, C);
    // clockwise: (i,j) -> (j, H-1-i), HxW grid -> WxH grid
    auto rot_cw = [&](const Tensor<double>& x) {
      Tensor<double> y({W * H, C});
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
          for (std::size_t c = 0; c < C; ++c)
            y.data[(j * H + (H - 1 - i)) * C + c] = x.data[(i * W + j) * C + c];
      return y;
    };
    auto rot_ccw = [&](const Tensor<double>& x) {
      Tensor<double> y({W * H, C});
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
          for (std::size_t c = 0; c < C; ++c)
            y.data[((W - 1 - j) * H + i) * C + c] = x.data[(i * W + j) * C + c];
      return y;
    };
    const auto orders = build_scan_orders(H, W);
    const auto orders_r = build_scan_orders(W, H);
    const auto kc = rot_cw(k), vc = rot_cw(v);
    const auto ka = rot_ccw(k), va = rot_ccw(v);
    double worst = bitwise_diff(directional_head(kc, vc, p, orders_r[3]),
                                rot_cw(directional_head(k, v, p, orders[2])));
    worst = std::max(worst,
                     bitwise_diff(directional_head(ka, va, p, orders_r[2]),
                                  rot_ccw(directional_head(k, v, p, orders[3]))));
    rows.push_back(exact_row("scan", "rotation_swaps_diagonals", 2, worst));
  }

  {  // half-turn rotation reverses every scan: each head maps to itself
    const std::size_t H = 3, W = 4, C = 2;
    auto k = random_normal<double>(rng, {H * W, C});
    auto v = random_normal<double>(rng, {H * W, C});
    auto p = random_params<double>(rng, C);
    auto rot180 = [&](const Tensor<double>& x) {
      Tensor<double> y({H * W, C});
      for (std::size_t t = 0; t < H * W; ++t)
        for (std::size_t c = 0; c < C; ++c)
          y.data[(H * W - 1 - t) * C + c] = x.data[t * C + c];
      return y;
    };
    const auto kr = rot180(k), vr = rot180(v);
    double worst = 0;
    for (const auto& o : build_scan_orders(H, W))
      worst = std::max(worst, bitwise_diff(directional_head(kr, vr, p, o),
                                           rot180(directional_head(k, v, p, o))));
    rows.push_back(exact_row("scan", "half_turn_self_covariance", 4, worst));
  }

  {  // projection parameter subtotals: 3, 2 and 1.5 C^2
    const std::size_t C = 192;
    bool ok = analysis::spatial_rkv_params(C, 1) == 3 * C * C &&
              analysis::spatial_rkv_params(C, 2) == 2 * C * C &&
              analysis::spatial_rkv_params(C, 4) == C * C + C * C / 2;
    ok = ok && analysis::spatial_rkv_params(192, 4) == 55296;
    rows.push_back(exact_row("scan", "rkv_param_subtotals", 4, ok ? 0.0 : 1.0));
  }

  {  // attention work is constant in the direction count
    bool ok = true;
    const std::size_t T = 196, C = 192;
    const std::size_t ref = analysis::wkv_work(T, C);
    for (int d : {1, 2, 4}) {
      // each direction processes C/d channels: d * T * (C/d) * 6
      const std::size_t per_dir = 6 * T * (C / static_cast<std::size_t>(d));
      if (static_cast<std::size_t>(d) * per_dir != ref) ok = false;
    }
    rows.push_back(exact_row("scan", "wkv_work_direction_invariant", 3,
                             ok ? 0.0 : 1.0));
  }

  return rows;
}

// --------------------------------------------------------------------------
// shift suite
// --------------------------------------------------------------------------

std::vector<Row> suite_shift(std::uint64_t seed) {
  std::vector<Row> rows;
  Rng rng(seed);

  auto make_layer = [&](std::size_t C, double scale) {
    MvcShiftLayer<double> layer;
    for (std::size_t i = 0; i < 3; ++i) {
      layer.dw[i] = random_normal<double>(rng, {C, 3, 3}, scale);
      layer.pw[i] = random_normal<double>(rng, {C, C}, scale);
    }
    return layer;
  };

  {  // zero weights: pure residual
    MvcShiftLayer<double> layer;
    for (std::size_t i = 0; i < 3; ++i) {
      layer.dw[i] = Tensor<double>({3, 3, 3});
      layer.pw[i] = Tensor<double>({3, 3});
    }
    auto x = random_normal<double>(rng, {20, 3});
    rows.push_back(exact_row("shift", "mvc_zero_weights_identity", 1,
                             bitwise_diff(mvc_shift(x, layer, 4, 5), x)));
  }

  {  // identity branch doubles the input through the residual
    const std::size_t C = 3;
    MvcShiftLayer<double> layer;
    for (std::size_t i = 0; i < 3; ++i) {
      layer.dw[i] = Tensor<double>({C, 3, 3});
      layer.pw[i] = Tensor<double>({C, C});
    }
    for (std::size_t c = 0; c < C; ++c) {
      layer.dw[0].data[(c * 3 + 1) * 3 + 1] = 1.0;  // centre delta
      layer.pw[0].data[c * C + c] = 1.0;            // identity mix
    }
    auto x = random_normal<double>(rng, {12, C});
    auto y = mvc_shift(x, layer, 3, 4);
    double worst = 0;
    for (std::size_t i = 0; i < x.numel(); ++i)
      worst = std::max(worst, rel_err(y.data[i], 2.0 * x.data[i]));
    rows.push_back(row("shift", "mvc_identity_branch_doubles", 1, worst, 1e-15));
  }

  {  // against a composition of convolution oracles
    double worst = 0;
    const std::size_t n = 5;
    for (std::size_t inst = 0; inst < n; ++inst) {
      const std::size_t H = 5, W = 5, C = 4;
      auto layer = make_layer(C, 0.3);
      auto x = random_normal<double>(rng, {H * W, C});
      auto got = mvc_shift(x, layer, H, W);

      auto chw = ops::tokens_to_chw(x, H, W);
      Tensor<double> acc = chw;
      for (std::size_t i = 0; i < 3; ++i) {
        auto conv = oracle::depthwise_conv2d(chw, layer.dw[i],
                                             static_cast<long>(i + 1));
        auto mixed = oracle::pointwise_conv(conv, layer.pw[i]);
        for (std::size_t j = 0; j < acc.numel(); ++j) acc.data[j] += mixed.data[j];
      }
      worst = std::max(worst, max_rel_err(got, ops::chw_to_tokens(acc)));
    }
    rows.push_back(row("shift", "mvc_vs_oracle_composition", n, worst, 1e-12));
  }

  {  // exact linearity (no biases anywhere)
    double worst = 0;
    const std::size_t n = 10;
    for (std::size_t inst = 0; inst < n; ++inst) {
      const std::size_t H = 4, W = 3, C = 4;
      auto layer = make_layer(C, 0.3);
      auto x = random_normal<double>(rng, {H * W, C});
      auto y = random_normal<double>(rng, {H * W, C});
      const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
      Tensor<double> mix({H * W, C});
      for (std::size_t i = 0; i < mix.numel(); ++i)
        mix.data[i] = a * x.data[i] + b * y.data[i];
      auto lhs = mvc_shift(mix, layer, H, W);
      auto fx = mvc_shift(x, layer, H, W);
      auto fy = mvc_shift(y, layer, H, W);
      for (std::size_t i = 0; i < mix.numel(); ++i)
        worst = std::max(worst,
                         rel_err(lhs.data[i], a * fx.data[i] + b * fy.data[i]));
    }
    rows.push_back(row("shift", "mvc_linearity", n, worst, 1e-12));
  }

  {  // gradients through the residual and every branch
    const std::size_t H = 3, W = 3, C = 2;
    auto layer = make_layer(C, 0.3);
    auto x = random_normal<double>(rng, {H * W, C});
    auto r = random_normal<double>(rng, {H * W, C});

    auto eval = [&]() {
      auto y = mvc_shift(x, layer, H, W);
      double acc = 0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += y.data[i] * r.data[i];
      return acc;
    };
    Tape<double> tp(true);
    int xid = tp.leaf(x, true);
    std::array<int, 3> dw{}, pw{};
    for (std::size_t i = 0; i < 3; ++i) {
      dw[i] = tp.leaf(layer.dw[i], true);
      pw[i] = tp.leaf(layer.pw[i], true);
    }
    int y = ag::mvc_shift(tp, xid, dw, pw, H, W);
    int rid = tp.leaf(r);
    int loss = ag::sum_all(tp, ag::mul(tp, y, rid));
    tp.backward(loss);

    double worst = fd_check(x, tp.grad(xid), eval, 1e-5);
    for (std::size_t i = 0; i < 3; ++i) {
      worst = std::max(worst, fd_check(layer.dw[i], tp.grad(dw[i]), eval, 1e-5));
      worst = std::max(worst, fd_check(layer.pw[i], tp.grad(pw[i]), eval, 1e-5));
    }
    rows.push_back(row("shift", "mvc_grad_vs_fd", 7, worst, 1e-6));
  }

  {  // 7x7 support: a point perturbation reaches at most Chebyshev radius 3
    const std::size_t H = 9, W = 9, C = 2;
    auto layer = make_layer(C, 0.3);
    auto x = random_normal<double>(rng, {H * W, C});
    auto base = mvc_shift(x, layer, H, W);
    Tensor<double> bumped = x;
    bumped.data[(4 * W + 4) * C] += 0.5;
    auto moved = mvc_shift(bumped, layer, H, W);
    bool ok = true;
    bool centre_changed = false;
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t c = 0; c < C; ++c) {
          const double d = std::abs(moved.data[(i * W + j) * C + c] -
                                    base.data[(i * W + j) * C + c]);
          const long cheb = std::max(std::labs(static_cast<long>(i) - 4),
                                     std::labs(static_cast<long>(j) - 4));
          if (d != 0.0 && cheb > 3) ok = false;
          if (d != 0.0 && cheb == 0) centre_changed = true;
        }
    rows.push_back(exact_row("shift", "mvc_receptive_field_7x7", 1,
                             ok && centre_changed ? 0.0 : 1.0));
  }

  {  // 1x1 grid: all neighbors padded away
    auto x = random_normal<double>(rng, {1, 8});
    auto mu = random_uniform<double>(rng, {8}, 0.1, 0.9);
    auto y = q_shift(x, 1, 1, &mu);
    double worst = 0;
    for (std::size_t c = 0; c < 8; ++c)
      worst = std::max(worst, rel_err(y.data[c], mu.data[c] * x.data[c]));
    rows.push_back(row("shift", "qshift_1x1_border", 1, worst, 1e-15));
  }

  {  // mu = 1 ignores the shifted part entirely
    auto x = random_normal<double>(rng, {12, 4});
    Tensor<double> mu({4}, 1.0);
    rows.push_back(exact_row("shift", "qshift_mu1_identity", 1,
                             bitwise_diff(q_shift(x, 3, 4, &mu), x)));
  }

  {  // 2x2 grid neighbor table, enumerated by hand
    const std::size_t C = 4;
    Tensor<double> x({4, C});
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t c = 0; c < C; ++c)
        x.data[t * C + c] = static_cast<double>(10 * t + c);
    Tensor<double> mu({C}, 0.25);
    auto y = q_shift(x, 2, 2, &mu);
    // neighbor grid index per (token, quarter); -1 = out of bounds
    const int nbr[4][4] = {{-1, 2, -1, 1},
                           {-1, 3, 0, -1},
                           {0, -1, -1, 3},
                           {1, -1, 2, -1}};
    double worst = 0;
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t c = 0; c < C; ++c) {
        const int src = nbr[t][c];  // quarter == channel here (C/4 == 1)
        const double shifted = src < 0 ? 0.0 : x.data[static_cast<std::size_t>(src) * C + c];
        const double expect = 0.25 * x.data[t * C + c] + 0.75 * shifted;
        worst = std::max(worst, rel_err(y.data[t * C + c], expect));
      }
    rows.push_back(row("shift", "qshift_2x2_neighbor_table", 1, worst, 1e-15));
  }

  {  // 1-D shift endpoints of the blend
    auto x = random_normal<double>(rng, {10, 3});
    Tensor<double> one({3}, 1.0), zero({3}, 0.0);
    double err_identity = bitwise_diff(lerp_shift(x, one), x);
    auto delayed = lerp_shift(x, zero);
    double worst = err_identity;
    for (std::size_t c = 0; c < 3; ++c)
      worst = std::max(worst, std::abs(delayed.data[c]));
    for (std::size_t t = 1; t < 10; ++t)
      for (std::size_t c = 0; c < 3; ++c)
        worst = std::max(worst, std::abs(delayed.data[t * 3 + c] -
                                         x.data[(t - 1) * 3 + c]));
    rows.push_back(exact_row("shift", "lerp_endpoints", 2, worst));
  }

  {  // blend formula against the two-line reference
    auto x = random_normal<double>(rng, {10, 3});
    auto mu = random_uniform<double>(rng, {3}, 0.0, 1.0);
    auto y = lerp_shift(x, mu);
    double worst = 0;
    for (std::size_t t = 0; t < 10; ++t)
      for (std::size_t c = 0; c < 3; ++c) {
        const double prev = t == 0 ? 0.0 : x.data[(t - 1) * 3 + c];
        const double expect =
            mu.data[c] * x.data[t * 3 + c] + (1.0 - mu.data[c]) * prev;
        worst = std::max(worst, rel_err(y.data[t * 3 + c], expect));
      }
    rows.push_back(row("shift", "lerp_vs_formula", 1, worst, 1e-15));
  }

  return rows;
}

// --------------------------------------------------------------------------
// model suite
// --------------------------------------------------------------------------

std::vector<Row> suite_model(std::uint64_t seed) {
  std::vector<Row> rows;
  Rng rng(seed);

  ModelConfig toy;
  toy.patch_size = 8;
  toy.embed_dim = 16;
  toy.stage_depths = {1, 1, 1, 1};
  toy.hidden_rate = 2;
  toy.directions = 4;
  toy.num_classes = 2;

  {  // patch arithmetic and zero propagation
    auto w = init_backbone<double>(toy, seed);
    Tensor<double> img({3, 32, 32});
    auto tokens = patch_embed(img, w.patch_w, w.patch_b, toy.patch_size);
    bool ok = tokens.shape[0] == 16 && tokens.shape[1] == 16;
    double zerr = 0;
    for (double v : tokens.data) zerr = std::max(zerr, std::abs(v));
    rows.push_back(exact_row("model", "patch_shape_and_zero", 2,
                             ok ? zerr : 1.0));
  }

  {  // patch embedding vs explicit gather + matmul
    auto img = random_normal<double>(rng, {3, 8, 8});
    auto w = random_normal<double>(rng, {3 * 4 * 4, 5}, 0.5);
    auto b = random_normal<double>(rng, {5}, 0.5);
    auto got = patch_embed(img, w, b, 4);
    Tensor<double> expect({4, 5});
    for (std::size_t gi = 0; gi < 2; ++gi)
      for (std::size_t gj = 0; gj < 2; ++gj)
        for (std::size_t o = 0; o < 5; ++o) {
          double acc = b.data[o];
          std::size_t idx = 0;
          for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t a = 0; a < 4; ++a)
              for (std::size_t bb = 0; bb < 4; ++bb) {
                acc += img.data[(c * 8 + gi * 4 + a) * 8 + gj * 4 + bb] *
                       w.data[idx * 5 + o];
                ++idx;
              }
          expect.data[(gi * 2 + gj) * 5 + o] = acc;
        }
    rows.push_back(row("model", "patch_vs_oracle", 1, max_rel_err(got, expect),
                       1e-12));
  }

  {  // zero kernel halves the input
    auto x = random_normal<double>(rng, {6, 8});
    Tensor<double> kern({3});
    auto y = eca(x, kern);
    double worst = 0;
    for (std::size_t i = 0; i < x.numel(); ++i)
      worst = std::max(worst, rel_err(y.data[i], 0.5 * x.data[i]));
    rows.push_back(row("model", "eca_zero_kernel_halves", 1, worst, 1e-15));
  }

  {  // saturated gate passes the input through
    Tensor<double> x({6, 8});
    for (auto& v : x.data) v = std::abs(rng.normal()) + 0.5;
    Tensor<double> kern({3});
    kern.data[1] = 50.0;
    auto y = eca(x, kern);
    rows.push_back(row("model", "eca_saturation", 1, max_rel_err(y, x), 1e-6));
  }

  {  // two-line reference: mean, conv, sigmoid, scale
    auto x = random_normal<double>(rng, {5, 6});
    auto kern = random_normal<double>(rng, {3});
    auto y = eca(x, kern);
    double worst = 0;
    std::vector<double> pooled(6, 0.0);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t c = 0; c < 6; ++c) pooled[c] += x.data[t * 6 + c] / 5.0;
    for (std::size_t c = 0; c < 6; ++c) {
      double z = 0;
      for (int j = -1; j <= 1; ++j) {
        const long s = static_cast<long>(c) + j;
        if (s < 0 || s >= 6) continue;
        z += kern.data[static_cast<std::size_t>(j + 1)] *
             pooled[static_cast<std::size_t>(s)];
      }
      const double gate = 1.0 / (1.0 + std::exp(-z));
      for (std::size_t t = 0; t < 5; ++t)
        worst = std::max(worst, rel_err(y.data[t * 6 + c], gate * x.data[t * 6 + c]));
    }
    rows.push_back(row("model", "eca_vs_formula", 1, worst, 1e-15));
  }

  {  // gate strictly inside (0,1)
    auto x = random_normal<double>(rng, {7, 8}, 3.0);
    auto kern = random_normal<double>(rng, {5}, 2.0);
    const auto gate = detail::eca_gate(x, kern);
    bool ok = true;
    for (double g : gate)
      if (!(g > 0.0 && g < 1.0)) ok = false;
    rows.push_back(exact_row("model", "eca_gate_open_interval", 1, ok ? 0.0 : 1.0));
  }

  auto make_channel = [&](std::size_t C, std::size_t rate, double scale) {
    ChannelMixWeights<double> w;
    w.ln_gamma = Tensor<double>({C}, 1.0);
    w.ln_beta = Tensor<double>({C});
    for (std::size_t i = 0; i < 3; ++i) {
      w.shift.dw[i] = random_normal<double>(rng, {C, 3, 3}, scale);
      w.shift.pw[i] = random_normal<double>(rng, {C, C}, scale);
    }
    w.wr = random_normal<double>(rng, {C, C}, scale);
    w.wk = random_normal<double>(rng, {C, rate * C}, scale);
    w.wv = random_normal<double>(rng, {rate * C, C}, scale);
    w.eca_kernel = random_normal<double>(rng, {3}, scale);
    return w;
  };

  {  // zero key projection annihilates the output
    auto w = make_channel(4, 2, 0.3);
    w.wk = Tensor<double>({4, 8});
    auto x = random_normal<double>(rng, {9, 4});
    auto y = channel_mix(x, w, 3, 3);
    double worst = 0;
    for (double v : y.data) worst = std::max(worst, std::abs(v));
    rows.push_back(exact_row("model", "channel_zero_key_annihilates", 1, worst));
  }

  {  // zero gate kernel: output is exactly half the gated values
    auto w = make_channel(4, 2, 0.3);
    w.eca_kernel = Tensor<double>({3});
    auto x = random_normal<double>(rng, {9, 4});
    auto y = channel_mix(x, w, 3, 3);
    const auto xc = ops::layer_norm(
        mvc_shift(x, w.shift, 3, 3), w.ln_gamma, w.ln_beta,
        ModelConfig::kLnEps);
    const auto r = oracle::matmul(xc, w.wr);
    const auto kk = oracle::matmul(xc, w.wk);
    Tensor<double> relu_k = kk;
    for (auto& v : relu_k.data) v = v > 0 ? v : 0;
    const auto vv = oracle::matmul(relu_k, w.wv);
    double worst = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) {
      const double expect = 0.5 * vv.data[i] / (1.0 + std::exp(-r.data[i]));
      worst = std::max(worst, rel_err(y.data[i], expect));
    }
    rows.push_back(row("model", "channel_vs_formula_oracle", 1, worst, 1e-13));
  }

  {  // full channel mix vs composed oracle (gate included)
    auto w = make_channel(4, 2, 0.3);
    auto x = random_normal<double>(rng, {9, 4});
    auto y = channel_mix(x, w, 3, 3);
    const auto xc = ops::layer_norm(mvc_shift(x, w.shift, 3, 3), w.ln_gamma,
                                    w.ln_beta, ModelConfig::kLnEps);
    const auto r = oracle::matmul(xc, w.wr);
    const auto kk = oracle::matmul(xc, w.wk);
    Tensor<double> relu_k = kk;
    for (auto& v : relu_k.data) v = v > 0 ? v : 0;
    const auto vv = oracle::matmul(relu_k, w.wv);
    Tensor<double> gated({9, 4});
    for (std::size_t i = 0; i < gated.numel(); ++i)
      gated.data[i] = vv.data[i] / (1.0 + std::exp(-r.data[i]));
    rows.push_back(row("model", "channel_vs_oracle_composition", 1,
                       max_rel_err(y, eca(gated, w.eca_kernel)), 1e-12));
  }

  auto make_spatial = [&](std::size_t C, int dirs, double scale) {
    SpatialMixWeights<double> w;
    w.ln_gamma = Tensor<double>({C}, 1.0);
    w.ln_beta = Tensor<double>({C});
    for (std::size_t i = 0; i < 3; ++i) {
      w.shift.dw[i] = random_normal<double>(rng, {C, 3, 3}, scale);
      w.shift.pw[i] = random_normal<double>(rng, {C, C}, scale);
    }
    const std::size_t head = C / static_cast<std::size_t>(dirs);
    w.attn.directions = dirs;
    w.attn.wr = random_normal<double>(rng, {C, C}, scale);
    w.attn.wk = random_normal<double>(rng, {C, head}, scale);
    w.attn.wv = random_normal<double>(rng, {C, head}, scale);
    w.attn.wo = random_normal<double>(rng, {C, C}, scale);
    w.attn.params = random_params<double>(rng, head);
    return w;
  };

  auto spatial_oracle = [&](const Tensor<double>& x,
                            const SpatialMixWeights<double>& w, std::size_t H,
                            std::size_t W) {
    const std::size_t C = x.shape[1];
    const std::size_t head = C / static_cast<std::size_t>(w.attn.directions);
    const auto xs = mvc_shift(
        ops::layer_norm(x, w.ln_gamma, w.ln_beta, ModelConfig::kLnEps),
        w.shift, H, W);
    const auto r = oracle::matmul(xs, w.attn.wr);
    const auto kk = oracle::matmul(xs, w.attn.wk);
    const auto vv = oracle::matmul(xs, w.attn.wv);
    const auto orders = scan_orders_for(w.attn.directions, H, W);
    Tensor<double> cat({H * W, C});
    for (std::size_t d = 0; d < orders.size(); ++d) {
      Tensor<double> ks({H * W, head}), vs({H * W, head});
      for (std::size_t s = 0; s < H * W; ++s)
        for (std::size_t c = 0; c < head; ++c) {
          ks.data[s * head + c] =
              kk.data[static_cast<std::size_t>(orders[d].inv[s]) * head + c];
          vs.data[s * head + c] =
              vv.data[static_cast<std::size_t>(orders[d].inv[s]) * head + c];
        }
      const auto y = wkv::bi_wkv_oracle(ks, vs, w.attn.params);
      for (std::size_t g = 0; g < H * W; ++g)
        for (std::size_t c = 0; c < head; ++c)
          cat.data[g * C + d * head + c] =
              y.data[static_cast<std::size_t>(orders[d].fwd[g]) * head + c];
    }
    Tensor<double> gated({H * W, C});
    for (std::size_t i = 0; i < gated.numel(); ++i)
      gated.data[i] = cat.data[i] / (1.0 + std::exp(-r.data[i]));
    return oracle::matmul(gated, w.attn.wo);
  };

  {  // zero input stays zero through the spatial path
    auto w = make_spatial(8, 4, 0.3);
    Tensor<double> x({16, 8});
    auto y = spatial_mix(x, w, 4, 4);
    double worst = 0;
    for (double v : y.data) worst = std::max(worst, std::abs(v));
    rows.push_back(exact_row("model", "spatial_zero_propagation", 1, worst));
  }

  {  // single-token grid
    auto w = make_spatial(4, 4, 0.4);
    auto x = random_normal<double>(rng, {1, 4});
    rows.push_back(row("model", "spatial_single_token", 1,
                       max_rel_err(spatial_mix(x, w, 1, 1),
                                   spatial_oracle(x, w, 1, 1)),
                       1e-12));
  }

  {  // 4x4 grid vs oracle composition
    auto w = make_spatial(8, 4, 0.3);
    auto x = random_normal<double>(rng, {16, 8});
    rows.push_back(row("model", "spatial_vs_oracle_composition", 1,
                       max_rel_err(spatial_mix(x, w, 4, 4),
                                   spatial_oracle(x, w, 4, 4)),
                       1e-12));
  }

  {  // zero-weight block is the identity
    auto w = make_backbone<double>(toy);
    for (auto& blk : w.blocks) {
      for (auto& g : blk.spatial.ln_gamma.data) g = 1.0;
      for (auto& g : blk.channel.ln_gamma.data) g = 1.0;
    }
    auto x = random_normal<double>(rng, {16, 16});
    auto y = rwkv2d_block(x, w.blocks[0], toy.directions, 4, 4);
    rows.push_back(exact_row("model", "block_zero_weights_identity", 1,
                             bitwise_diff(y, x)));
  }

  {  // block vs composition of the two verified mixes
    auto w = init_backbone<double>(toy, seed + 1);
    auto x = random_normal<double>(rng, {16, 16});
    const auto& blk = w.blocks[0];
    auto y = rwkv2d_block(x, blk, toy.directions, 4, 4);
    auto mid = ops::add(x, spatial_mix(x, blk.spatial, 4, 4));
    auto expect = ops::add(mid, channel_mix(mid, blk.channel, 4, 4));
    rows.push_back(row("model", "block_vs_mix_composition", 1,
                       max_rel_err(y, expect), 1e-12));
  }

  {  // residual identity: zero block weights leave the patch tokens at taps
    auto w = init_backbone<double>(toy, seed + 2);
    for (auto& blk : w.blocks) {
      for (std::size_t i = 0; i < 3; ++i) {
        blk.spatial.shift.dw[i] = Tensor<double>({16, 3, 3});
        blk.spatial.shift.pw[i] = Tensor<double>({16, 16});
        blk.channel.shift.dw[i] = Tensor<double>({16, 3, 3});
        blk.channel.shift.pw[i] = Tensor<double>({16, 16});
      }
      blk.spatial.attn.wr = Tensor<double>({16, 16});
      blk.spatial.attn.wk = Tensor<double>({16, 4});
      blk.spatial.attn.wv = Tensor<double>({16, 4});
      blk.spatial.attn.wo = Tensor<double>({16, 16});
      blk.channel.wr = Tensor<double>({16, 16});
      blk.channel.wk = Tensor<double>({16, 32});
      blk.channel.wv = Tensor<double>({32, 16});
      blk.channel.eca_kernel = Tensor<double>({blk.channel.eca_kernel.numel()});
    }
    auto img = random_normal<double>(rng, {3, 32, 32});
    auto tokens = patch_embed(img, w.patch_w, w.patch_b, toy.patch_size);
    auto out = backbone_forward(img, w);
    double worst = 0;
    for (const auto& tap : out.stage_tokens)
      worst = std::max(worst, bitwise_diff(tap, tokens));
    rows.push_back(exact_row("model", "residual_identity_taps", 4, worst));
  }

  {  // logits shape contract
    auto w = init_backbone<double>(toy, seed + 3);
    auto img = random_normal<double>(rng, {3, 32, 32});
    auto out = backbone_forward(img, w);
    bool ok = out.logits.rank() == 1 && out.logits.shape[0] == toy.num_classes;
    rows.push_back(exact_row("model", "logits_shape", 1, ok ? 0.0 : 1.0));
  }

  {  // formula counts match actually allocated parameters
    bool ok = true;
    std::vector<ModelConfig> cfgs{toy};
    ModelConfig two = toy;
    two.directions = 2;
    cfgs.push_back(two);
    ModelConfig wide = toy;
    wide.hidden_rate = 3;
    wide.num_classes = 7;
    wide.eca_kernel = 5;
    cfgs.push_back(wide);
    for (const auto& cfg : cfgs) {
      const auto w = make_backbone<double>(cfg);
      if (analysis::count_params(cfg).total != param_count(w)) ok = false;
    }
    rows.push_back(exact_row("model", "param_count_matches_storage",
                             cfgs.size(), ok ? 0.0 : 1.0));
  }

  {  // full-block gradient wrt the input vs central differences
    ModelConfig small = toy;
    auto w = init_backbone<double>(small, seed + 4);
    auto x = random_normal<double>(rng, {16, 16});
    auto r = random_normal<double>(rng, {16, 16});
    const auto& blk = w.blocks[0];

    auto eval = [&]() {
      auto y = rwkv2d_block(x, blk, small.directions, 4, 4);
      double acc = 0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += y.data[i] * r.data[i];
      return acc;
    };
    Tape<double> tp(true);
    int xid = tp.leaf(x, true);
    TapedBackbone staged = stage_backbone(tp, w, false);
    int y = ag::rwkv2d_block(tp, xid, staged.blocks[0], small.directions, 4, 4);
    int rid = tp.leaf(r);
    tp.backward(ag::sum_all(tp, ag::mul(tp, y, rid)));
    rows.push_back(row("model", "block_input_grad_vs_fd", 1,
                       fd_check(x, tp.grad(xid), eval, 1e-5), 1e-6));
  }

  return rows;
}

}  // namespace

std::vector<Row> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "kernel") return suite_kernel(seed);
  if (suite == "scan") return suite_scan(seed);
  if (suite == "shift") return suite_shift(seed);
  if (suite == "model") return suite_model(seed);
  if (suite == "all") {
    std::vector<Row> rows;
    for (const char* s : {"kernel", "scan", "shift", "model"}) {
      auto part = run_suite(s, seed);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
  }
  throw UsageError("verify: unknown suite '" + suite + "'");
}

std::string rows_csv(const std::vector<Row>& rows) {
  std::string out = "suite,case,count,max_rel_err,pass\n";
  for (const Row& r : rows)
    out += r.suite + "," + r.name + "," + io::fmt(r.count) + "," +
           io::fmt(r.max_err) + "," + (r.pass ? "1" : "0") + "\n";
  return out;
}

bool all_pass(const std::vector<Row>& rows) {
  for (const Row& r : rows)
    if (!r.pass) return false;
  return true;
}

}  // namespace rsrwkv::verify
