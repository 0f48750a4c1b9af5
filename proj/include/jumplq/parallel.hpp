#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace jumplq {

// Chunked index-parallel loop. Work must write to per-index slots only, so
// the result is identical for any worker count; the first exception thrown
// by any worker is rethrown on the calling thread.
inline void parallel_for(int n, const std::function<void(int)>& fn,
                         int n_workers = 0) {
  if (n <= 0) return;
  const unsigned hw = std::thread::hardware_concurrency();
  int workers = n_workers > 0 ? n_workers : (hw ? static_cast<int>(hw) : 1);
  if (workers > n) workers = n;
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::mutex mu;
  std::exception_ptr err;
  for (int j = 0; j < workers; ++j) {
    const int lo = static_cast<int>(static_cast<long long>(n) * j / workers);
    const int hi = static_cast<int>(static_cast<long long>(n) * (j + 1) / workers);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace jumplq
