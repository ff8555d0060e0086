#pragma once

#include <cstddef>
#include <functional>

namespace hetlb {

/// Worker count: HETLB_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
/// index runs exactly once; the exception from the lowest failing index is rethrown after all
/// workers have joined. Results must be written to per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace hetlb
