#pragma once

#include <cstddef>
#include <functional>

namespace gwharm {

/// Number of worker threads used when a caller passes 0.
unsigned hardware_workers();

/// Runs `body(i)` for every i in [0, n). Work items are handed out dynamically
/// to `workers` threads (0 = hardware concurrency). Callers write results into
/// per-item slots and reduce them in index order afterwards, so the outcome
/// never depends on the worker count or on scheduling.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

} // namespace gwharm
