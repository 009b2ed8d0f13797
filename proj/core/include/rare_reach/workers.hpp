#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rare_reach {

/// Number of workers to use when the caller asks for 0 ("auto").
inline unsigned resolveWorkers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs body(i) for i in [0, count) on up to `workers` threads.
 *
 * Work items are claimed dynamically, so callers must write results into a
 * slot indexed by i and reduce afterwards in index order; that keeps every
 * result independent of the worker count. The first exception thrown by any
 * body is rethrown on the calling thread.
 */
template <class Body>
void parallelFor(std::size_t count, unsigned workers, Body&& body) {
  const unsigned threads = static_cast<unsigned>(
      std::min<std::size_t>(resolveWorkers(workers), std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr firstError;
  std::mutex errorMutex;
  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(errorMutex);
        if (!firstError) firstError = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (firstError) std::rethrow_exception(firstError);
}

}  // namespace rare_reach
