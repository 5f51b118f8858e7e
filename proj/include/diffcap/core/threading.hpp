#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace diffcap {

// Worker count resolution: DIFFCAP_THREADS wins (0 or unset means auto),
// DIFFCAP_DETERMINISTIC=1 does not cap it — parallel loops use static
// index-based partitioning and disjoint writes, so results never depend on
// the worker count to begin with.
inline int thread_count() {
  static const int n = [] {
    long v = 0;
    if (const char* env = std::getenv("DIFFCAP_THREADS")) {
      char* end = nullptr;
      long parsed = std::strtol(env, &end, 10);
      if (end != env && parsed >= 0) v = parsed;
    }
    if (v <= 0) {
      unsigned hw = std::thread::hardware_concurrency();
      v = hw == 0 ? 1 : static_cast<long>(hw);
    }
    return static_cast<int>(v);
  }();
  return n;
}

inline bool deterministic_mode() {
  static const bool on = [] {
    const char* env = std::getenv("DIFFCAP_DETERMINISTIC");
    return env != nullptr && std::string(env) == "1";
  }();
  return on;
}

// Runs fn(i) for i in [0, n). Contiguous static chunks per worker; fn must
// only write state owned by index i so any worker count gives identical
// results.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  int workers = thread_count();
  if (workers <= 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (workers > n) workers = static_cast<int>(n);
  std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    std::int64_t lo = w * chunk;
    std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace diffcap
