#pragma once

// Deterministic fan-out: work is cut into fixed chunks independent of the
// worker count, each chunk writes its own slot, and callers reduce the slots
// in index order. Parallel and serial runs therefore agree bit for bit.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace stablesde {

/// Worker count: STABLESDE_THREADS if set and positive, else the hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STABLESDE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
    } catch (...) {
    }
  }
  return hw;
}

/// Calls fn(chunk_index, begin, end) for every chunk of [0, n). Exceptions are
/// rethrown on the calling thread after all workers stop.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
  if (n == 0) return;
  chunk_size = std::max<std::size_t>(1, chunk_size);
  const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), chunks));
  auto run = [&](std::size_t c) { fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size)); };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        run(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) { return (n + chunk_size - 1) / chunk_size; }

}  // namespace stablesde
