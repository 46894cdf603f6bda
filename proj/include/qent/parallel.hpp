#pragma once

#include <cstddef>
#include <functional>

namespace qent {

/// Worker count: QENT_THREADS if set (>= 1), otherwise hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) over up to `threads` workers in contiguous
/// chunks. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = worker_count());

}  // namespace qent
