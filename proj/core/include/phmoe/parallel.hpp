#pragma once

#include <cstddef>
#include <functional>

namespace phmoe {

/// Worker cap from PHMOE_THREADS (unset or 0 means hardware concurrency).
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n, so per-index outputs are identical for any worker count.
/// The exception from the lowest-indexed failing chunk is rethrown.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace phmoe
