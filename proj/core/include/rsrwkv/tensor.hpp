#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsrwkv {

// Error taxonomy: shape/dimension mismatches, bad configuration values,
// misuse of an API (wrong call order, unknown name), and numeric failures
// (non-finite values escaping an op).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_shape(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}
inline void check_config(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}
inline void check_usage(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

template <typename T>
constexpr Dtype dtype_of();
template <>
constexpr Dtype dtype_of<float>() {
  return Dtype::F32;
}
template <>
constexpr Dtype dtype_of<double>() {
  return Dtype::F64;
}

inline const char* dtype_name(Dtype d) {
  return d == Dtype::F32 ? "f32" : "f64";
}

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

// Dense row-major tensor. The scalar type doubles as the dtype tag:
// Tensor<float> is the runtime flavor, Tensor<double> the test flavor.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, T fill = T(0))
      : shape(std::move(s)), data(shape_numel(shape), fill) {
    for (std::size_t e : shape)
      check_shape(e > 0, "tensor extents must be positive");
  }

  static Tensor scalar(T v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t extent(std::size_t axis) const { return shape.at(axis); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // Unchecked rank-2 / rank-3 accessors; callers validate shapes up front.
  T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  T at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  T at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
void ensure_finite(const Tensor<T>& t, const char* op) {
  if (!all_finite(t))
    throw NumericError(std::string(op) + ": non-finite value in result");
}

template <typename To, typename From>
Tensor<To> cast_tensor(const Tensor<From>& src) {
  Tensor<To> out;
  out.shape = src.shape;
  out.data.resize(src.data.size());
  for (std::size_t i = 0; i < src.data.size(); ++i)
    out.data[i] = static_cast<To>(src.data[i]);
  return out;
}

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string r = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) r += "x";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

}  // namespace rsrwkv
