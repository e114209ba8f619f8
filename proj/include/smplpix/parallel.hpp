#pragma once

#include <cstddef>
#include <functional>

namespace smplpix {

// Resolves a user thread count: 0 means hardware concurrency, otherwise the
// value itself (at least 1).
unsigned resolve_threads(int requested) noexcept;

// Runs body(begin, end) over `threads` contiguous static chunks of [0, n).
// Chunk boundaries depend only on (n, threads). The first exception thrown by
// any chunk is rethrown on the calling thread.
void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& body);

// Per-index convenience wrapper over parallel_chunks.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace smplpix
