#pragma once

#include <cstddef>
#include <functional>

namespace cpodem {

/// Worker count: CPODEM_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write results into per-index slots so the outcome does not depend on
/// scheduling. Exceptions from any worker are rethrown (lowest index first).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cpodem
