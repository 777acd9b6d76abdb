#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "rsrwkv/tensor.hpp"

namespace rsrwkv::bench {

struct Sample {
  std::size_t size = 0;     // token count T
  double median_ns = 0.0;
};

template <typename F>
double median_time_ns(F&& fn, int reps) {
  check_usage(reps >= 1, "bench: reps must be positive");
  fn();  // warm-up
  fn();
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(
        std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

// Least-squares slope of ln(time) against ln(size).
double loglog_slope(const std::vector<Sample>& samples);

enum class Kernel { BiWkvScan, BiWkvOracle, Wkv2d };

Kernel kernel_by_name(const std::string& name);

// Times one kernel at token count T with C channels on seeded random data.
Sample run_kernel(Kernel kernel, std::size_t T, std::size_t C, int reps,
                  std::uint64_t seed);

std::vector<Sample> run_scaling(Kernel kernel, const std::vector<std::size_t>& sizes,
                                std::size_t C, int reps, std::uint64_t seed);

// CSV rows (T, median_ns) with the fitted slope appended as a final row.
std::string samples_csv(const std::vector<Sample>& samples, double slope);

}  // namespace rsrwkv::bench
