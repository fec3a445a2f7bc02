#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thermoray {

/// Runs body(i) for i in [0, n). Results must be written to per-index slots;
/// the first exception (lowest index) is rethrown after all workers join.
template <typename Body>
void parallel_for(long n, int threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  const int k = static_cast<int>(std::min<long>(threads, n));
  std::atomic<long> next{0};
  std::mutex m;
  long err_index = n;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (int w = 0; w < k; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace thermoray
