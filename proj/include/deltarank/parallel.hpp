#pragma once

#include <cstddef>
#include <functional>

namespace deltarank {

/// Worker count from DELTA_RANK_THREADS, else hardware concurrency (>= 1).
std::size_t default_thread_count();

/// Runs task(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace deltarank
