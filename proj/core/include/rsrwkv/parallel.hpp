#pragma once

#include <cstddef>
#include <functional>

namespace rsrwkv {

// Worker count for channel-parallel kernels. Controlled by the
// RSRWKV_THREADS environment variable: 0 means serial, unset defaults to
// the hardware concurrency. Partitions are static and contiguous, so
// results are identical for any worker count.
int worker_count();

// Runs fn(begin, end) over a static partition of [0, n).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace rsrwkv
