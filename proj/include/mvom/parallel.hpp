#pragma once

#include <cstddef>
#include <functional>

namespace mvom {

/// Number of workers used when a caller passes threads <= 0.
int default_thread_count();

/// Calls body(begin, end) on contiguous chunks covering [0, count), one chunk
/// per worker. Chunk boundaries depend on the thread count, so bodies must
/// write per-index results and leave reductions to the caller.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mvom
