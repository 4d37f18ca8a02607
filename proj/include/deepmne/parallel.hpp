#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace deepmne {

// Upper bound on worker threads used by parallel_for. 0 means hardware concurrency.
inline std::atomic<std::size_t>& thread_limit() {
  static std::atomic<std::size_t> limit{0};
  return limit;
}

inline void set_thread_limit(std::size_t n) { thread_limit() = n; }

inline std::size_t worker_count(std::size_t tasks) {
  std::size_t limit = thread_limit();
  if (limit == 0) limit = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::min(limit, tasks);
}

// Runs body(i) for i in [0, n). Each index is processed exactly once; callers
// must only write to per-index state so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace deepmne
