#pragma once

#include <cstddef>
#include <functional>

namespace specloop {

/// Worker count: SPECLOOP_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. The first
/// exception thrown (lowest index) is rethrown after all tasks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace specloop
