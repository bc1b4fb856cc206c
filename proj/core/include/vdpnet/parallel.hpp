#pragma once

#include <cstddef>
#include <functional>

namespace vdpnet {

/// Upper bound on worker threads used by parallel_for. 0 means hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [0, count). Each index is executed exactly once; callers
/// write results into per-index slots and reduce afterwards in index order, so
/// outcomes do not depend on the thread count. The first exception thrown by any
/// body is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace vdpnet
