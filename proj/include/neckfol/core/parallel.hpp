#pragma once

#include <cstddef>
#include <functional>

namespace neckfol {

// Process-wide worker budget, owned by the orchestrator. Defaults to 1.
void set_workers(int workers);
int workers();

// Splits [0, count) into contiguous chunks, one per worker. Chunk boundaries
// depend only on count and the worker budget, so per-item results never depend
// on scheduling. Reductions must be done by the caller in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace neckfol
