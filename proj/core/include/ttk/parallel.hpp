#pragma once

#include <cstddef>
#include <functional>

namespace ttk {

// Worker-thread cap from TTK_NUM_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Runs fn(chunk_index, begin, end) for fixed-size chunks of [0, n). Chunk
// boundaries depend only on n and chunk, never on the thread count, so
// callers that reduce per-chunk partials in chunk order stay deterministic.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

}  // namespace ttk
