#include "rsrwkv/bench.hpp"

#include <algorithm>
#include <cmath>

#include "rsrwkv/io.hpp"
#include "rsrwkv/rng.hpp"
#include "rsrwkv/scan2d.hpp"
#include "rsrwkv/wkv.hpp"

namespace rsrwkv::bench {

namespace {
// keeps the optimizer from discarding kernel results
volatile double g_sink = 0.0;
}  // namespace

double loglog_slope(const std::vector<Sample>& samples) {
  check_usage(samples.size() >= 2, "bench: slope needs at least two sizes");
  double sx = 0, sy = 0;
  for (const Sample& s : samples) {
    sx += std::log(static_cast<double>(s.size));
    sy += std::log(s.median_ns);
  }
  const double mx = sx / static_cast<double>(samples.size());
  const double my = sy / static_cast<double>(samples.size());
  double num = 0, den = 0;
  for (const Sample& s : samples) {
    const double dx = std::log(static_cast<double>(s.size)) - mx;
    num += dx * (std::log(s.median_ns) - my);
    den += dx * dx;
  }
  return num / den;
}

Kernel kernel_by_name(const std::string& name) {
  if (name == "bi_wkv_scan") return Kernel::BiWkvScan;
  if (name == "bi_wkv_oracle") return Kernel::BiWkvOracle;
  if (name == "wkv_2d") return Kernel::Wkv2d;
  throw UsageError("bench: unknown kernel '" + name + "'");
}

Sample run_kernel(Kernel kernel, std::size_t T, std::size_t C, int reps,
                  std::uint64_t seed) {
  check_usage(T >= 1 && C >= 1, "bench: sizes must be positive");
  Rng rng(seed);
  Sample out{T, 0.0};
  if (kernel == Kernel::Wkv2d) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(
        static_cast<double>(T))));
    check_usage(side * side == T, "bench: wkv_2d sizes must be perfect squares");
    check_config(C % 4 == 0, "bench: wkv_2d channel count must be divisible by 4");
    Wkv2dLayer<float> layer;
    layer.directions = 4;
    layer.wr = random_normal<float>(rng, {C, C}, 0.2);
    layer.wk = random_normal<float>(rng, {C, C / 4}, 0.2);
    layer.wv = random_normal<float>(rng, {C, C / 4}, 0.2);
    layer.wo = random_normal<float>(rng, {C, C}, 0.2);
    layer.params = wkv::default_params<float>(C / 4);
    const auto x = random_normal<float>(rng, {T, C});
    out.median_ns = median_time_ns(
        [&] {
          auto y = wkv_2d(x, layer, side, side);
          g_sink = g_sink + static_cast<double>(y.data[0]);
        },
        reps);
    return out;
  }

  const auto k = random_normal<float>(rng, {T, C});
  const auto v = random_normal<float>(rng, {T, C});
  wkv::WkvParams<float> params = wkv::default_params<float>(C);
  if (kernel == Kernel::BiWkvScan) {
    out.median_ns = median_time_ns(
        [&] {
          auto y = wkv::bi_wkv_scan(k, v, params);
          g_sink = g_sink + static_cast<double>(y.data[0]);
        },
        reps);
  } else {
    out.median_ns = median_time_ns(
        [&] {
          auto y = wkv::bi_wkv_oracle(k, v, params);
          g_sink = g_sink + static_cast<double>(y.data[0]);
        },
        reps);
  }
  return out;
}

std::vector<Sample> run_scaling(Kernel kernel,
                                const std::vector<std::size_t>& sizes,
                                std::size_t C, int reps, std::uint64_t seed) {
  check_usage(!sizes.empty(), "bench: empty size list");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    check_usage(sizes[i - 1] < sizes[i], "bench: sizes must be ascending");
  std::vector<Sample> samples;
  samples.reserve(sizes.size());
  for (std::size_t t : sizes) samples.push_back(run_kernel(kernel, t, C, reps, seed));
  return samples;
}

std::string samples_csv(const std::vector<Sample>& samples, double slope) {
  std::string out = "T,median_ns\n";
  for (const Sample& s : samples)
    out += io::fmt(s.size) + "," + io::fmt(s.median_ns) + "\n";
  out += "slope," + io::fmt(slope) + "\n";
  return out;
}

}  // namespace rsrwkv::bench
