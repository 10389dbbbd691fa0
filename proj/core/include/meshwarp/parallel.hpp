#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace meshwarp {

/// Number of workers used by parallel loops. Reads MESHWARP_THREADS on every
/// call (values < 1 or unparsable fall back to the hardware concurrency).
std::size_t worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks are
/// disjoint, so callers that write only to their own indices get results
/// that do not depend on the worker count. The first exception thrown by any
/// chunk is rethrown on the calling thread.
void parallel_for_chunks(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& body);

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  parallel_for_chunks(count, [&fn](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace meshwarp
