#pragma once

#include <cstddef>
#include <functional>

namespace clonegraph {

/// Caps the number of worker threads used by every data-parallel loop.
/// Zero means "use std::thread::hardware_concurrency()".
void set_max_threads(unsigned threads);
unsigned max_threads();

/// Runs body(begin, end) over contiguous chunks of [first, last). Chunk boundaries
/// depend only on the range and the grain, never on the thread count, so any body
/// that writes disjoint outputs per index is deterministic. Exceptions thrown by a
/// chunk are rethrown on the calling thread (the first one by chunk order).
void parallel_for(std::size_t first, std::size_t last, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace clonegraph
