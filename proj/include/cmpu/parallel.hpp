#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cmpu {

/// Worker count from CMPU_WORKERS, else the hardware concurrency; at least 1.
std::size_t worker_count();

/// Runs job(i) for every i in [0, n) on up to `workers` threads. Jobs write
/// their results into caller-owned slots, so the reduction order stays fixed.
/// The exception of the lowest failing index is rethrown.
template <typename Job>
void parallel_for(std::size_t n, std::size_t workers, Job&& job) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = workers < n ? workers : n;
  for (std::size_t w = 0; w < count; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cmpu
