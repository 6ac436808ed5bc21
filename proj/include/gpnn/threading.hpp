#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace gpnn {

inline int effective_threads(int requested) {
  if (requested <= 1) return 1;
  return requested;
}

// Static block partition; workers write only to caller-owned per-index slots,
// so results are independent of the worker count.
inline void parallel_for(int64_t count, int threads,
                         const std::function<void(int64_t)>& fn) {
  threads = effective_threads(threads);
  if (threads == 1 || count < 2 * threads) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  int64_t chunk = (count + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    int64_t lo = w * chunk;
    int64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gpnn
