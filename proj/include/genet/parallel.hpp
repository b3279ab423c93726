#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace genet {

namespace detail {
inline std::atomic<int>& thread_count() {
  static std::atomic<int> n{1};
  return n;
}
}  // namespace detail

inline void set_num_threads(int n) { detail::thread_count() = n < 1 ? 1 : n; }
inline int num_threads() { return detail::thread_count().load(); }

// Splits [0, n) into contiguous ranges, one per worker. Writers own disjoint
// ranges and per-range iteration order is fixed, so results do not depend on
// the thread count.
template <class Fn>
void parallel_for(int64_t n, Fn&& fn) {
  const int threads = num_threads();
  if (threads <= 1 || n < 2048) {
    fn(int64_t{0}, n);
    return;
  }
  const int workers = static_cast<int>(std::min<int64_t>(threads, n));
  const int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int64_t lo = w * chunk;
    const int64_t hi = std::min<int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace genet
