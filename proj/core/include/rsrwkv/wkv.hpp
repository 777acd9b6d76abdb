#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rsrwkv/parallel.hpp"
#include "rsrwkv/tensor.hpp"

// Weighted key-value attention kernels.
//
// Causal form: token t averages values v_i with weights exp(-(t-1-i)*w + k_i)
// for i < t and exp(u + k_t) for the token itself.
//
// Bidirectional form: every token attends to all others with weights
// exp(-(|t-i|-1)/T * w + k_i), again with exp(u + k_t) for itself. The /T
// scaling makes the decay horizon resolution-independent.
//
// All kernels run the recurrences in log space: each accumulator carries a
// running max exponent m and max-shifted sums, so arbitrary k magnitudes
// stay finite (raw exponentials overflow f32 around |k| ~ 88).
namespace rsrwkv::wkv {

// Per-channel decay w and current-token bonus u. One instance is shared by
// all scan directions of a layer.
template <typename T>
struct WkvParams {
  Tensor<T> w;  // [C] spatial decay, used as given (no sign constraint)
  Tensor<T> u;  // [C] current-token bonus

  std::size_t channels() const { return w.numel(); }
};

namespace detail {

template <typename T>
inline constexpr T neg_inf() {
  return -std::numeric_limits<T>::infinity();
}

// Max-shifted accumulator for sums of exp(e_i) * payload_i under a per-step
// decay. m tracks the running max exponent; a (weighted values) and b
// (weights) are stored relative to it.
template <typename T>
struct StreamState {
  T m = neg_inf<T>();
  T a = T(0);
  T b = T(0);

  // Decay existing mass by exp(-decay), then absorb a term with exponent e
  // and value v.
  void step(T decay, T e, T v) {
    const T shifted = m - decay;
    const T m2 = shifted > e ? shifted : e;
    const T fold = std::exp(shifted - m2);
    const T fresh = std::exp(e - m2);
    a = fold * a + fresh * v;
    b = fold * b + fresh;
    m = m2;
  }
};

template <typename T>
void check_kv(const Tensor<T>& k, const Tensor<T>& v, const WkvParams<T>& p) {
  check_shape(k.rank() == 2 && v.rank() == 2, "wkv: k and v must be [T,C]");
  check_shape(k.same_shape(v), "wkv: k and v shapes differ");
  check_shape(k.shape[0] >= 1, "wkv: empty input (T = 0)");
  check_shape(p.w.numel() == k.shape[1] && p.u.numel() == k.shape[1],
              "wkv: params extent must match channel count");
}

}  // namespace detail

// Causal recurrence, O(T*C). Output t uses only tokens i <= t.
template <typename T>
Tensor<T> wkv_causal(const Tensor<T>& k, const Tensor<T>& v,
                     const WkvParams<T>& params) {
  detail::check_kv(k, v, params);
  const std::size_t Tn = k.shape[0], C = k.shape[1];
  Tensor<T> out({Tn, C});
  parallel_for(C, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      const T w = params.w.data[c];
      const T u = params.u.data[c];
      detail::StreamState<T> past;  // sums over i < t at exponent k_i - (t-1-i)w
      for (std::size_t t = 0; t < Tn; ++t) {
        const T kt = k.data[t * C + c];
        const T vt = v.data[t * C + c];
        const T self_e = u + kt;
        const T m = past.m > self_e ? past.m : self_e;
        const T fold = std::exp(past.m - m);
        const T fresh = std::exp(self_e - m);
        out.data[t * C + c] =
            (fold * past.a + fresh * vt) / (fold * past.b + fresh);
        past.step(w, kt, vt);
      }
    }
  });
  ensure_finite(out, "wkv_causal");
  return out;
}

// Literal double-loop evaluation of the bidirectional form with a per-output
// max shift and extended-precision accumulation. Ground truth, O(T^2*C).
template <typename T>
Tensor<T> bi_wkv_oracle(const Tensor<T>& k, const Tensor<T>& v,
                        const WkvParams<T>& params) {
  detail::check_kv(k, v, params);
  const std::size_t Tn = k.shape[0], C = k.shape[1];
  Tensor<T> out({Tn, C});
  parallel_for(C, [&](std::size_t c0, std::size_t c1) {
    std::vector<long double> expo(Tn);
    for (std::size_t c = c0; c < c1; ++c) {
      const long double w = params.w.data[c];
      const long double u = params.u.data[c];
      const long double omega = w / static_cast<long double>(Tn);
      for (std::size_t t = 0; t < Tn; ++t) {
        long double m = detail::neg_inf<long double>();
        for (std::size_t i = 0; i < Tn; ++i) {
          const long double d =
              i == t ? 0.0L
                     : static_cast<long double>(
                           i > t ? (i - t) - 1 : (t - i) - 1);
          expo[i] = i == t ? u + static_cast<long double>(k.data[t * C + c])
                           : -d * omega +
                                 static_cast<long double>(k.data[i * C + c]);
          if (expo[i] > m) m = expo[i];
        }
        long double num = 0, den = 0;
        for (std::size_t i = 0; i < Tn; ++i) {
          const long double e = std::exp(expo[i] - m);
          num += e * static_cast<long double>(v.data[i * C + c]);
          den += e;
        }
        out.data[t * C + c] = static_cast<T>(num / den);
      }
    }
  });
  ensure_finite(out, "bi_wkv_oracle");
  return out;
}

// Linear-time bidirectional kernel: one forward pass accumulates prefix
// sums, one backward pass accumulates suffix sums, and each output folds the
// two with the current-token bonus term under a shared running max.
template <typename T>
Tensor<T> bi_wkv_scan(const Tensor<T>& k, const Tensor<T>& v,
                      const WkvParams<T>& params) {
  detail::check_kv(k, v, params);
  const std::size_t Tn = k.shape[0], C = k.shape[1];
  Tensor<T> out({Tn, C});
  parallel_for(C, [&](std::size_t c0, std::size_t c1) {
    std::vector<detail::StreamState<T>> suffix(Tn);
    for (std::size_t c = c0; c < c1; ++c) {
      const T w = params.w.data[c];
      const T u = params.u.data[c];
      const T omega = w / static_cast<T>(Tn);

      detail::StreamState<T> state;
      for (std::size_t t = Tn; t-- > 0;) {
        suffix[t] = state;  // sums over i > t
        state.step(omega, k.data[t * C + c], v.data[t * C + c]);
      }

      detail::StreamState<T> prefix;  // sums over i < t
      for (std::size_t t = 0; t < Tn; ++t) {
        const T kt = k.data[t * C + c];
        const T vt = v.data[t * C + c];
        const T self_e = u + kt;
        const detail::StreamState<T>& suf = suffix[t];
        T m = prefix.m > suf.m ? prefix.m : suf.m;
        if (self_e > m) m = self_e;
        const T ep = std::exp(prefix.m - m);
        const T es = std::exp(suf.m - m);
        const T ec = std::exp(self_e - m);
        const T num = (ep * prefix.a + es * suf.a) + ec * vt;
        const T den = (ep * prefix.b + es * suf.b) + ec;
        out.data[t * C + c] = num / den;
        prefix.step(omega, kt, vt);
      }
    }
  });
  ensure_finite(out, "bi_wkv_scan");
  return out;
}

template <typename T>
struct BiWkvGrads {
  Tensor<T> gk, gv, gw, gu;
};

namespace detail {

// Streamed backward accumulator: sums of exp(e_i - d*omega) * payload and
// the same sums weighted by the step distance d (needed for the decay
// gradient). Payloads come in pairs (pg, ph).
template <typename T>
struct GradStream {
  T m = neg_inf<T>();
  T ag = T(0), ah = T(0);  // plain sums
  T sg = T(0), sh = T(0);  // distance-weighted sums

  void step(T decay, T e, T pg, T ph) {
    const T shifted = m - decay;
    const T m2 = shifted > e ? shifted : e;
    const T fold = std::exp(shifted - m2);
    const T fresh = std::exp(e - m2);
    // distance-weighted sums advance before the new (d = 0) term lands
    sg = fold * (sg + ag);
    sh = fold * (sh + ah);
    ag = fold * ag + fresh * pg;
    ah = fold * ah + fresh * ph;
    m = m2;
  }
};

}  // namespace detail

// Analytic gradients of bi_wkv_scan, O(T*C). Recomputes the forward pass
// internally, then reorganizes the double sum so each position reads two
// streamed accumulations of grad_out mass (one over earlier outputs, one
// over later outputs).
template <typename T>
BiWkvGrads<T> bi_wkv_backward(const Tensor<T>& k, const Tensor<T>& v,
                              const WkvParams<T>& params,
                              const Tensor<T>& grad_out) {
  detail::check_kv(k, v, params);
  check_shape(grad_out.same_shape(k), "bi_wkv_backward: grad_out shape mismatch");
  const std::size_t Tn = k.shape[0], C = k.shape[1];

  BiWkvGrads<T> g{Tensor<T>({Tn, C}), Tensor<T>({Tn, C}), Tensor<T>({C}),
                  Tensor<T>({C})};

  parallel_for(C, [&](std::size_t c0, std::size_t c1) {
    std::vector<detail::StreamState<T>> suffix(Tn);
    std::vector<T> y(Tn), gt(Tn), ht(Tn), big_m(Tn);
    std::vector<detail::GradStream<T>> pre(Tn), suf(Tn);
    for (std::size_t c = c0; c < c1; ++c) {
      const T w = params.w.data[c];
      const T u = params.u.data[c];
      const T omega = w / static_cast<T>(Tn);

      // Forward replay, keeping per-position y, shifted denominator and max.
      detail::StreamState<T> state;
      for (std::size_t t = Tn; t-- > 0;) {
        suffix[t] = state;
        state.step(omega, k.data[t * C + c], v.data[t * C + c]);
      }
      detail::StreamState<T> prefix;
      for (std::size_t t = 0; t < Tn; ++t) {
        const T kt = k.data[t * C + c];
        const T vt = v.data[t * C + c];
        const T self_e = u + kt;
        const detail::StreamState<T>& sfx = suffix[t];
        T m = prefix.m > sfx.m ? prefix.m : sfx.m;
        if (self_e > m) m = self_e;
        const T ep = std::exp(prefix.m - m);
        const T es = std::exp(sfx.m - m);
        const T ec = std::exp(self_e - m);
        const T num = (ep * prefix.a + es * sfx.a) + ec * vt;
        const T den = (ep * prefix.b + es * sfx.b) + ec;
        y[t] = num / den;
        big_m[t] = m;
        gt[t] = grad_out.data[t * C + c] / den;  // scaled grad; true g = gt*e^-m
        ht[t] = y[t] * gt[t];
        prefix.step(omega, kt, vt);
      }

      // Streamed grad mass: exponent -M_t with payloads (gt, ht).
      detail::GradStream<T> acc;
      for (std::size_t j = 0; j < Tn; ++j) {
        pre[j] = acc;
        acc.step(omega, -big_m[j], gt[j], ht[j]);
      }
      acc = detail::GradStream<T>();
      for (std::size_t j = Tn; j-- > 0;) {
        suf[j] = acc;
        acc.step(omega, -big_m[j], gt[j], ht[j]);
      }

      T grad_u = 0, grad_omega = 0;
      for (std::size_t j = 0; j < Tn; ++j) {
        const T kj = k.data[j * C + c];
        const T vj = v.data[j * C + c];
        const T epre = std::exp(kj + pre[j].m);
        const T esuf = std::exp(kj + suf[j].m);
        const T sum_g = epre * pre[j].ag + esuf * suf[j].ag;
        const T sum_h = epre * pre[j].ah + esuf * suf[j].ah;
        const T self_scale = std::exp(u + kj - big_m[j]);
        const T self_g = self_scale * gt[j];

        g.gv.data[j * C + c] = sum_g + self_g;
        g.gk.data[j * C + c] = vj * sum_g - sum_h + self_g * (vj - y[j]);
        grad_u += self_g * (vj - y[j]);
        grad_omega -= vj * (epre * pre[j].sg + esuf * suf[j].sg) -
                      (epre * pre[j].sh + esuf * suf[j].sh);
      }
      g.gu.data[c] = grad_u;
      g.gw.data[c] = grad_omega / static_cast<T>(Tn);
    }
  });
  return g;
}

// Default parameter spread: decay linearly spaced in [-1, 1] across
// channels, bonus zero.
template <typename T>
WkvParams<T> default_params(std::size_t channels) {
  WkvParams<T> p{Tensor<T>({channels}), Tensor<T>({channels})};
  for (std::size_t c = 0; c < channels; ++c)
    p.w.data[c] = channels == 1
                      ? T(0)
                      : T(-1) + T(2) * static_cast<T>(c) /
                                    static_cast<T>(channels - 1);
  return p;
}

}  // namespace rsrwkv::wkv
