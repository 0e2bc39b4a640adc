#pragma once

#include <cstddef>
#include <functional>

namespace mudikit {

/// Worker count: MUDIKIT_THREADS when set to a positive integer, otherwise
/// std::thread::hardware_concurrency() (at least 1).
unsigned worker_count();

/// Calls fn(i) for every i in [0, n) on up to `threads` workers (0 means
/// worker_count()). Indices are handed out in blocks; callers write results
/// into per-index slots so output never depends on scheduling. The first
/// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace mudikit
