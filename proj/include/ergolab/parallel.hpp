#pragma once

#include <cstddef>
#include <functional>

namespace ergolab {

/// Worker count: ERGOLAB_THREADS if set to a positive integer, otherwise the
/// machine's hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. If any
/// call throws, the exception from the smallest such i is rethrown after all
/// calls finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ergolab
