#pragma once

#include <cstddef>
#include <functional>

namespace epa {

/// Worker count: `requested` if non-zero, else EPA_THREADS if set, else the
/// hardware concurrency.
unsigned resolve_threads(unsigned requested = 0);

/// Runs fn(i) for i in [0, n) over contiguous chunks. Callers write results
/// into pre-sized slots, so output never depends on the worker count. If any
/// call throws, the exception from the lowest index is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace epa
