#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

// Deterministic replica parallelism: the index range [0, n) is split into
// contiguous chunks, one per worker. Workers write results into
// caller-owned, index-addressed slots; the caller reduces sequentially
// afterwards, so aggregates are byte-identical for any thread count.

namespace cookiewalk {

inline void parallel_chunks(int64_t n, int threads,
                            const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  int workers = threads;
  if (workers < 1) workers = 1;
  if (workers > n) workers = static_cast<int>(n);
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int64_t begin = static_cast<int64_t>(w) * chunk;
    const int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cookiewalk
