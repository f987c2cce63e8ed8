#pragma once

#include <cstddef>
#include <functional>

namespace remqst {

/// Worker count: REMQST_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads. The first
/// exception thrown by any call is rethrown after all workers finish.
/// Calls made from inside a worker run inline.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace remqst
