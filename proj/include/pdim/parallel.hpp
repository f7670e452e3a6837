#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace pdim {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
/// expected to write only its own slot of a preallocated result array, so
/// output is independent of scheduling.
inline void parallel_for(long count, int jobs, const std::function<void(long)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count < 2) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  std::atomic<long> next{0};
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace pdim
