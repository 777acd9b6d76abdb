#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rsrwkv/model.hpp"
#include "rsrwkv/tensor.hpp"

namespace rsrwkv::io {

// Deterministic number formatting for CSV reports (17 significant digits
// round-trips any double).
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const void* data,
                       std::size_t size);
void write_text_file(const std::string& path, const std::string& text);

// ---------------------------------------------------------------------------
// RTN1 tensor container: magic "RTN1", u8 dtype (0=f32, 1=f64), u8 rank,
// rank little-endian u32 extents, then raw little-endian values row-major.
// ---------------------------------------------------------------------------

namespace detail {

template <typename V>
void put_le(std::ostream& os, V v) {
  // assumes little-endian host (x86/ARM64 linux)
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get_le(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw IoError("rtn1: truncated stream");
  return v;
}

}  // namespace detail

template <typename T>
void write_rtn1(std::ostream& os, const Tensor<T>& t) {
  os.write("RTN1", 4);
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(dtype_of<T>()));
  check_config(t.rank() <= 255, "rtn1: rank too large");
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape) {
    check_config(e <= 0xffffffffu, "rtn1: extent too large");
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  }
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(T)));
  if (!os) throw IoError("rtn1: write failed");
}

inline Dtype peek_rtn1_dtype(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RTN1", 4) != 0)
    throw IoError("rtn1: bad magic");
  const auto code = detail::get_le<std::uint8_t>(is);
  if (code > 1) throw IoError("rtn1: unknown dtype code");
  return static_cast<Dtype>(code);
}

// Reads a tensor, converting the stored dtype to T if they differ. A
// write/read round trip at matching dtype is bit-exact.
template <typename T>
Tensor<T> read_rtn1(std::istream& is) {
  const Dtype stored = peek_rtn1_dtype(is);
  const auto rank = detail::get_le<std::uint8_t>(is);
  std::vector<std::size_t> shape(rank);
  for (auto& e : shape) e = detail::get_le<std::uint32_t>(is);
  const std::size_t n = shape_numel(shape);
  Tensor<T> out;
  out.shape = std::move(shape);
  out.data.resize(n);
  if (stored == dtype_of<T>()) {
    is.read(reinterpret_cast<char*>(out.data.data()),
            static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw IoError("rtn1: truncated payload");
  } else if (stored == Dtype::F32) {
    std::vector<float> raw(n);
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!is) throw IoError("rtn1: truncated payload");
    for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<T>(raw[i]);
  } else {
    std::vector<double> raw(n);
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw IoError("rtn1: truncated payload");
    for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<T>(raw[i]);
  }
  return out;
}

template <typename T>
void write_rtn1_file(const std::string& path, const Tensor<T>& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("rtn1: cannot open " + path);
  write_rtn1(os, t);
}

template <typename T>
Tensor<T> read_rtn1_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("rtn1: cannot open " + path);
  return read_rtn1<T>(is);
}

// ---------------------------------------------------------------------------
// Images: binary P6 PPM in (scaled to [0,1], planes [3,H,W]), binary P5 PGM
// out (values in [0,1] scaled to 0..255).
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> read_ppm(const std::string& path);

template <typename T>
void write_pgm(const std::string& path, const Tensor<T>& grid) {
  check_shape(grid.rank() == 2, "pgm: grid must be rank 2");
  std::string header = "P5\n" + std::to_string(grid.shape[1]) + " " +
                       std::to_string(grid.shape[0]) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + grid.numel());
  for (T v : grid.data) {
    double s = static_cast<double>(v);
    if (s < 0) s = 0;
    if (s > 1) s = 1;
    bytes.push_back(static_cast<std::uint8_t>(s * 255.0 + 0.5));
  }
  write_binary_file(path, bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Checkpoints: <prefix>.manifest.json (name -> shape, offset; plus the
// config) and <prefix>.rtn1 (one flat blob holding every parameter in
// visit_params order).
// ---------------------------------------------------------------------------

std::string checkpoint_manifest_json(
    const ModelConfig& cfg, Dtype dtype, const std::string& blob_name,
    const std::vector<std::pair<std::string, std::vector<std::size_t>>>& entries,
    const std::vector<std::size_t>& offsets);

struct ManifestEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset;
};

struct CheckpointManifest {
  ModelConfig config;
  Dtype dtype;
  std::string blob_name;
  std::vector<ManifestEntry> entries;
};

CheckpointManifest parse_checkpoint_manifest(const std::string& json_text);

template <typename T>
void save_checkpoint(const std::string& prefix, const BackboneWeights<T>& w) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> entries;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  visit_params(w, [&](const std::string& name, const Tensor<T>& t) {
    entries.emplace_back(name, t.shape);
    offsets.push_back(total);
    total += t.numel();
  });
  Tensor<T> blob({total});
  std::size_t off = 0;
  visit_params(w, [&](const std::string&, const Tensor<T>& t) {
    std::memcpy(blob.data.data() + off, t.data.data(), t.numel() * sizeof(T));
    off += t.numel();
  });

  const std::string blob_path = prefix + ".rtn1";
  write_rtn1_file(blob_path, blob);
  std::string base = blob_path;
  if (auto slash = base.find_last_of('/'); slash != std::string::npos)
    base = base.substr(slash + 1);
  write_text_file(prefix + ".manifest.json",
                  checkpoint_manifest_json(w.config, dtype_of<T>(), base,
                                           entries, offsets));
}

template <typename T>
BackboneWeights<T> load_checkpoint(const std::string& prefix) {
  const auto bytes = read_binary_file(prefix + ".manifest.json");
  const CheckpointManifest manifest =
      parse_checkpoint_manifest(std::string(bytes.begin(), bytes.end()));
  std::string dir;
  if (auto slash = prefix.find_last_of('/'); slash != std::string::npos)
    dir = prefix.substr(0, slash + 1);
  Tensor<T> blob = read_rtn1_file<T>(dir + manifest.blob_name);

  BackboneWeights<T> w = make_backbone<T>(manifest.config);
  std::size_t idx = 0;
  visit_params(w, [&](const std::string& name, Tensor<T>& t) {
    check_usage(idx < manifest.entries.size(), "checkpoint: manifest too short");
    const ManifestEntry& e = manifest.entries[idx++];
    check_usage(e.name == name, "checkpoint: parameter order mismatch at " + name);
    check_shape(e.shape == t.shape, "checkpoint: shape mismatch for " + name);
    check_usage(e.offset + t.numel() <= blob.numel(),
                "checkpoint: blob too short for " + name);
    std::memcpy(t.data.data(), blob.data.data() + e.offset,
                t.numel() * sizeof(T));
  });
  check_usage(idx == manifest.entries.size(),
              "checkpoint: manifest has extra entries");
  return w;
}

}  // namespace rsrwkv::io
