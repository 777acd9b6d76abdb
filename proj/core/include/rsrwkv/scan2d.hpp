#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rsrwkv/tape.hpp"
#include "rsrwkv/tensor.hpp"
#include "rsrwkv/wkv.hpp"

namespace rsrwkv {

// A bijection between grid cells (row-major index over an HxW grid) and
// sequence positions, with its exact inverse.
struct ScanOrder {
  std::string name;           // horizontal | vertical | diag_anti | diag_main
  std::vector<int> fwd;       // grid index -> sequence position
  std::vector<int> inv;       // sequence position -> grid index
};

// The four canonical traversals:
//   horizontal: rows top->bottom, left->right (row-major identity)
//   vertical:   columns left->right, top->bottom
//   diag_anti:  anti-diagonals i+j ascending, i ascending within each
//   diag_main:  diagonals i-j+(W-1) ascending, i ascending within each
// Returned in that order.
std::vector<ScanOrder> build_scan_orders(std::size_t H, std::size_t W);

// Direction subsets used by the layer configs: 1 -> {horizontal},
// 2 -> {horizontal, vertical}, 4 -> all four.
std::vector<ScanOrder> scan_orders_for(int directions, std::size_t H,
                                       std::size_t W);

// CSV table (grid_index, then one sequence-position column per direction).
std::string scan_orders_csv(std::size_t H, std::size_t W);

// Directional attention layer. K/V are projected to C/directions channels
// shared by every direction; exactly one decay/bonus pair regardless of the
// direction count.
template <typename T>
struct Wkv2dLayer {
  int directions = 4;        // 1 | 2 | 4
  wkv::WkvParams<T> params;  // [C/directions]
  Tensor<T> wr;              // [C, C]
  Tensor<T> wk;              // [C, C/directions]
  Tensor<T> wv;              // [C, C/directions]
  Tensor<T> wo;              // [C, C]
};

template <typename T>
void validate_wkv2d_layer(const Wkv2dLayer<T>& layer, std::size_t C) {
  check_config(layer.directions == 1 || layer.directions == 2 ||
                   layer.directions == 4,
               "wkv_2d: direction count must be 1, 2 or 4");
  check_config(C % static_cast<std::size_t>(layer.directions) == 0,
               "wkv_2d: channels not divisible by direction count");
  const std::size_t head = C / static_cast<std::size_t>(layer.directions);
  check_shape(layer.wr.rank() == 2 && layer.wr.shape[0] == C &&
                  layer.wr.shape[1] == C,
              "wkv_2d: receptance projection must be [C,C]");
  check_shape(layer.wk.shape[0] == C && layer.wk.shape[1] == head,
              "wkv_2d: key projection must be [C,C/d]");
  check_shape(layer.wv.shape[0] == C && layer.wv.shape[1] == head,
              "wkv_2d: value projection must be [C,C/d]");
  check_shape(layer.wo.shape[0] == C && layer.wo.shape[1] == C,
              "wkv_2d: output projection must be [C,C]");
  check_shape(layer.params.channels() == head,
              "wkv_2d: decay/bonus extent must be C/d");
}

namespace ag {

template <typename T>
int bi_wkv(Tape<T>& tp, int k, int v, int decay, int bonus) {
  wkv::WkvParams<T> p{tp.value(decay), tp.value(bonus)};
  return tp.record(wkv::bi_wkv_scan(tp.value(k), tp.value(v), p),
                   {k, v, decay, bonus},
                   [k, v, decay, bonus](Tape<T>& t, int self) {
                     wkv::WkvParams<T> params{t.value(decay), t.value(bonus)};
                     auto g = wkv::bi_wkv_backward(t.value(k), t.value(v),
                                                   params, t.grad(self));
                     t.add_grad(k, std::move(g.gk));
                     t.add_grad(v, std::move(g.gv));
                     t.add_grad(decay, std::move(g.gw));
                     t.add_grad(bonus, std::move(g.gu));
                   });
}

// Full directional attention: project r/k/v, run one bidirectional pass per
// scan direction on the shared k/v head, re-scan each result back to grid
// order, concatenate, gate with sigmoid(r) and project out.
template <typename T>
int wkv_2d(Tape<T>& tp, int x, int wr, int wk, int wv, int wo, int decay,
           int bonus, const std::vector<ScanOrder>& orders, std::size_t H,
           std::size_t W) {
  check_shape(tp.value(x).shape[0] == H * W, "wkv_2d: token count must be H*W");
  check_config(!orders.empty(), "wkv_2d: no scan directions");
  check_config(tp.value(x).shape[1] % orders.size() == 0,
               "wkv_2d: channels not divisible by direction count");
  int r = ag::linear(tp, x, wr);
  int kproj = ag::linear(tp, x, wk);
  int vproj = ag::linear(tp, x, wv);
  std::vector<int> heads;
  heads.reserve(orders.size());
  for (const ScanOrder& order : orders) {
    int ks = ag::gather_rows(tp, kproj, order.inv);
    int vs = ag::gather_rows(tp, vproj, order.inv);
    int y = ag::bi_wkv(tp, ks, vs, decay, bonus);
    heads.push_back(ag::gather_rows(tp, y, order.fwd));
  }
  int cat = heads.size() == 1 ? heads[0] : ag::concat_cols(tp, heads);
  int gated = ag::mul(tp, ag::sigmoid(tp, r), cat);
  return ag::linear(tp, gated, wo);
}

}  // namespace ag

// One direction's head on grid-ordered k/v: scan, attend, re-scan.
template <typename T>
Tensor<T> directional_head(const Tensor<T>& k, const Tensor<T>& v,
                           const wkv::WkvParams<T>& params,
                           const ScanOrder& order) {
  Tensor<T> ks = ops::gather_rows(k, order.inv);
  Tensor<T> vs = ops::gather_rows(v, order.inv);
  Tensor<T> y = wkv::bi_wkv_scan(ks, vs, params);
  return ops::gather_rows(y, order.fwd);
}

template <typename T>
Tensor<T> wkv_2d(const Tensor<T>& x, const Wkv2dLayer<T>& layer, std::size_t H,
                 std::size_t W) {
  validate_wkv2d_layer(layer, x.shape[1]);
  Tape<T> tp(false);
  int xid = tp.leaf(x);
  int wr = tp.leaf(layer.wr);
  int wk = tp.leaf(layer.wk);
  int wv = tp.leaf(layer.wv);
  int wo = tp.leaf(layer.wo);
  int decay = tp.leaf(layer.params.w);
  int bonus = tp.leaf(layer.params.u);
  const auto orders = scan_orders_for(layer.directions, H, W);
  int out = ag::wkv_2d(tp, xid, wr, wk, wv, wo, decay, bonus, orders, H, W);
  return tp.value(out);
}

}  // namespace rsrwkv
