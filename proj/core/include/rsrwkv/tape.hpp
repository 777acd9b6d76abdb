#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "rsrwkv/ops.hpp"
#include "rsrwkv/tensor.hpp"

namespace rsrwkv {

// Reverse-mode tape. Ops append nodes in execution order; backward() sweeps
// the records once, in reverse, pulling the output gradient of each node and
// accumulating into its parents. One tape per training step, single writer.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  int leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), {}, false,
                          requires_grad && grad_enabled_, {}, {}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int record(Tensor<T> value, std::vector<int> parents, BackwardFn back) {
    Node n{std::move(value), {}, false, false, {}, {}};
    if (grad_enabled_) {
      n.parents = std::move(parents);
      n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Tensor<T>& value(int id) const { return nodes_.at(id).value; }

  bool has_grad(int id) const { return nodes_.at(id).has_grad; }

  const Tensor<T>& grad(int id) const {
    const Node& n = nodes_.at(id);
    check_usage(n.has_grad, "tape: gradient not available for node");
    return n.grad;
  }

  void add_grad(int id, Tensor<T>&& g) {
    Node& n = nodes_.at(id);
    check_shape(g.same_shape(n.value), "tape: gradient shape mismatch");
    if (!n.has_grad) {
      n.grad = std::move(g);
      n.has_grad = true;
    } else {
      for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
    }
  }

  // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. Afterwards every
  // grad-enabled leaf holds a gradient of its own shape (zero if the loss
  // does not depend on it).
  void backward(int loss) {
    check_usage(grad_enabled_, "tape: backward on a no-grad tape");
    check_usage(!swept_, "tape: backward already ran on this tape");
    check_usage(loss >= 0 && loss < static_cast<int>(nodes_.size()),
                "tape: unknown loss node");
    check_usage(nodes_[loss].value.numel() == 1,
                "tape: loss must be a scalar tensor");
    swept_ = true;
    add_grad(loss, Tensor<T>::scalar(T(1)));
    for (int i = loss; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.has_grad && n.back) n.back(*this, i);
    }
    for (Node& n : nodes_) {
      if (n.requires_grad && !n.has_grad) {
        n.grad = Tensor<T>(n.value.shape);
        n.has_grad = true;
      }
    }
  }

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<int> parents;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
  bool swept_ = false;
};

// Taped wrappers over the ops:: kernels.
namespace ag {

template <typename T>
int add(Tape<T>& tp, int a, int b) {
  return tp.record(ops::add(tp.value(a), tp.value(b)), {a, b},
                   [a, b](Tape<T>& t, int self) {
                     Tensor<T> g = t.grad(self);
                     t.add_grad(a, Tensor<T>(g));
                     t.add_grad(b, std::move(g));
                   });
}

template <typename T>
int mul(Tape<T>& tp, int a, int b) {
  return tp.record(ops::mul(tp.value(a), tp.value(b)), {a, b},
                   [a, b](Tape<T>& t, int self) {
                     t.add_grad(a, ops::mul(t.grad(self), t.value(b)));
                     t.add_grad(b, ops::mul(t.grad(self), t.value(a)));
                   });
}

template <typename T>
int scale(Tape<T>& tp, int x, T c) {
  return tp.record(ops::scale(tp.value(x), c), {x},
                   [x, c](Tape<T>& t, int self) {
                     t.add_grad(x, ops::scale(t.grad(self), c));
                   });
}

template <typename T>
int sigmoid(Tape<T>& tp, int x) {
  return tp.record(ops::sigmoid(tp.value(x)), {x},
                   [x](Tape<T>& t, int self) {
                     t.add_grad(x, ops::sigmoid_backward(t.value(self), t.grad(self)));
                   });
}

template <typename T>
int relu(Tape<T>& tp, int x) {
  return tp.record(ops::relu(tp.value(x)), {x},
                   [x](Tape<T>& t, int self) {
                     t.add_grad(x, ops::relu_backward(t.value(x), t.grad(self)));
                   });
}

template <typename T>
int linear(Tape<T>& tp, int x, int w, int bias = -1) {
  const Tensor<T>* b = bias >= 0 ? &tp.value(bias) : nullptr;
  std::vector<int> parents = bias >= 0 ? std::vector<int>{x, w, bias}
                                       : std::vector<int>{x, w};
  return tp.record(ops::linear(tp.value(x), tp.value(w), b), std::move(parents),
                   [x, w, bias](Tape<T>& t, int self) {
                     auto g = ops::linear_backward(t.value(x), t.value(w),
                                                   t.grad(self), bias >= 0);
                     t.add_grad(x, std::move(g.gx));
                     t.add_grad(w, std::move(g.gw));
                     if (bias >= 0) t.add_grad(bias, std::move(*g.gbias));
                   });
}

template <typename T>
int layer_norm(Tape<T>& tp, int x, int gamma, int beta, T eps) {
  return tp.record(
      ops::layer_norm(tp.value(x), tp.value(gamma), tp.value(beta), eps),
      {x, gamma, beta}, [x, gamma, beta, eps](Tape<T>& t, int self) {
        auto g = ops::layer_norm_backward(t.value(x), t.value(gamma), eps,
                                          t.grad(self));
        t.add_grad(x, std::move(g.gx));
        t.add_grad(gamma, std::move(g.ggamma));
        t.add_grad(beta, std::move(g.gbeta));
      });
}

template <typename T>
int depthwise_conv2d(Tape<T>& tp, int x, int kernel, std::size_t dilation) {
  return tp.record(
      ops::depthwise_conv2d(tp.value(x), tp.value(kernel), dilation),
      {x, kernel}, [x, kernel, dilation](Tape<T>& t, int self) {
        auto g = ops::depthwise_conv2d_backward(t.value(x), t.value(kernel),
                                                dilation, t.grad(self));
        t.add_grad(x, std::move(g.gx));
        t.add_grad(kernel, std::move(g.gkernel));
      });
}

template <typename T>
int pointwise_conv(Tape<T>& tp, int x, int w) {
  return tp.record(ops::pointwise_conv(tp.value(x), tp.value(w)), {x, w},
                   [x, w](Tape<T>& t, int self) {
                     auto g = ops::pointwise_conv_backward(t.value(x), t.value(w),
                                                           t.grad(self));
                     t.add_grad(x, std::move(g.gx));
                     t.add_grad(w, std::move(g.gw));
                   });
}

template <typename T>
int tokens_to_chw(Tape<T>& tp, int x, std::size_t H, std::size_t W) {
  return tp.record(ops::tokens_to_chw(tp.value(x), H, W), {x},
                   [x](Tape<T>& t, int self) {
                     t.add_grad(x, ops::chw_to_tokens(t.grad(self)));
                   });
}

template <typename T>
int chw_to_tokens(Tape<T>& tp, int x) {
  const std::size_t H = tp.value(x).shape[1], W = tp.value(x).shape[2];
  return tp.record(ops::chw_to_tokens(tp.value(x)), {x},
                   [x, H, W](Tape<T>& t, int self) {
                     t.add_grad(x, ops::tokens_to_chw(t.grad(self), H, W));
                   });
}

template <typename T>
int gather_rows(Tape<T>& tp, int x, std::vector<int> idx) {
  Tensor<T> y = ops::gather_rows(tp.value(x), idx);
  return tp.record(std::move(y), {x},
                   [x, idx = std::move(idx)](Tape<T>& t, int self) {
                     t.add_grad(x, ops::scatter_rows(t.grad(self), idx));
                   });
}

template <typename T>
int concat_cols(Tape<T>& tp, const std::vector<int>& parts) {
  std::vector<const Tensor<T>*> vals;
  std::vector<std::size_t> widths;
  vals.reserve(parts.size());
  for (int p : parts) {
    vals.push_back(&tp.value(p));
    widths.push_back(tp.value(p).shape[1]);
  }
  return tp.record(ops::concat_cols(vals), std::vector<int>(parts),
                   [parts, widths](Tape<T>& t, int self) {
                     std::size_t off = 0;
                     for (std::size_t i = 0; i < parts.size(); ++i) {
                       t.add_grad(parts[i],
                                  ops::slice_cols(t.grad(self), off, widths[i]));
                       off += widths[i];
                     }
                   });
}

template <typename T>
int row_mean(Tape<T>& tp, int x) {
  const std::size_t rows = tp.value(x).shape[0];
  return tp.record(ops::row_mean(tp.value(x)), {x},
                   [x, rows](Tape<T>& t, int self) {
                     const Tensor<T>& g = t.grad(self);
                     const std::size_t cols = g.numel();
                     Tensor<T> gx({rows, cols});
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t c = 0; c < cols; ++c)
                         gx.data[r * cols + c] = g.data[c] / static_cast<T>(rows);
                     t.add_grad(x, std::move(gx));
                   });
}

template <typename T>
int select_row(Tape<T>& tp, int x, std::size_t row) {
  const std::size_t rows = tp.value(x).shape[0];
  return tp.record(ops::select_row(tp.value(x), row), {x},
                   [x, row, rows](Tape<T>& t, int self) {
                     const Tensor<T>& g = t.grad(self);
                     Tensor<T> gx({rows, g.numel()});
                     for (std::size_t c = 0; c < g.numel(); ++c)
                       gx.data[row * g.numel() + c] = g.data[c];
                     t.add_grad(x, std::move(gx));
                   });
}

template <typename T>
int sum_all(Tape<T>& tp, int x) {
  return tp.record(ops::sum_all(tp.value(x)), {x},
                   [x](Tape<T>& t, int self) {
                     const T g = t.grad(self).data[0];
                     Tensor<T> gx(t.value(x).shape, g);
                     t.add_grad(x, std::move(gx));
                   });
}

template <typename T>
int linear_vec(Tape<T>& tp, int x, int w, int bias = -1) {
  const Tensor<T>* b = bias >= 0 ? &tp.value(bias) : nullptr;
  std::vector<int> parents = bias >= 0 ? std::vector<int>{x, w, bias}
                                       : std::vector<int>{x, w};
  return tp.record(ops::linear_vec(tp.value(x), tp.value(w), b),
                   std::move(parents), [x, w, bias](Tape<T>& t, int self) {
                     auto g = ops::linear_vec_backward(t.value(x), t.value(w),
                                                       t.grad(self), bias >= 0);
                     t.add_grad(x, std::move(g.gx));
                     t.add_grad(w, std::move(g.gw));
                     if (bias >= 0) t.add_grad(bias, std::move(*g.gbias));
                   });
}

template <typename T>
int gather_patches(Tape<T>& tp, int image, std::size_t p) {
  const Tensor<T>& img = tp.value(image);
  const std::size_t Cin = img.shape[0], H = img.shape[1], W = img.shape[2];
  return tp.record(ops::gather_patches(img, p), {image},
                   [image, Cin, H, W, p](Tape<T>& t, int self) {
                     t.add_grad(image,
                                ops::scatter_patches(t.grad(self), Cin, H, W, p));
                   });
}

template <typename T>
int cross_entropy(Tape<T>& tp, int logits, std::size_t target) {
  return tp.record(
      Tensor<T>::scalar(ops::cross_entropy(tp.value(logits), target)), {logits},
      [logits, target](Tape<T>& t, int self) {
        t.add_grad(logits, ops::cross_entropy_backward(t.value(logits), target,
                                                       t.grad(self).data[0]));
      });
}

}  // namespace ag
}  // namespace rsrwkv
