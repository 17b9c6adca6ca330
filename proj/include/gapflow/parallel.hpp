#pragma once

#include <functional>

#include "gapflow/numeric.hpp"

namespace gapflow {

/// Worker count for stage-parallel evaluation, read from GAPFLOW_THREADS
/// (default 1, capped by the hardware concurrency).
int stage_thread_count();

/// Calls `body(begin, end)` over contiguous chunks of [0, count). Chunks write
/// disjoint outputs, so results do not depend on the thread count.
void parallel_for_stages(Index count,
                         const std::function<void(Index, Index)>& body);

}  // namespace gapflow
