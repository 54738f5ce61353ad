#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sensched {

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(task) for task in [0, num_tasks) on up to `workers` threads.
/// Tasks are claimed dynamically; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::int64_t num_tasks, int workers, Fn&& fn) {
  if (num_tasks <= 0) return;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::int64_t>(num_tasks, 1 << 20))));
  if (workers == 1) {
    for (std::int64_t i = 0; i < num_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= num_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(num_tasks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace sensched
