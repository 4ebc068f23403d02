#pragma once

#include <cstddef>
#include <functional>

namespace htrl {

/// Worker count: TP_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Work is
/// handed out in index order; callers write results into per-index slots so
/// the outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace htrl
