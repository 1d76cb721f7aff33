#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace divbound {

/// Worker count: `requested` if positive, else DIVBOUND_THREADS if set, else
/// the hardware concurrency.  Never exceeds `tasks`.
inline unsigned worker_count(std::size_t tasks, unsigned requested = 0) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("DIVBOUND_THREADS")) {
      try {
        n = static_cast<unsigned>(std::max(1, std::stoi(env)));
      } catch (const std::exception&) {
        n = 1;
      }
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::clamp<std::size_t>(tasks, 1, n));
}

/// Calls body(i) for i in [0, count) on a small pool.  Work items are pulled
/// from a shared counter; results must be written to per-index slots so the
/// outcome does not depend on scheduling.  The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = 0) {
  if (count == 0) return;
  const unsigned workers = worker_count(count, threads);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace divbound
