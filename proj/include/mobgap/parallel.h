#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mobgap {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// thrown by any call is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t const n, unsigned const jobs, Fn&& fn) {
  auto const workers = std::min<std::size_t>(std::max(1U, jobs), n);
  if (workers <= 1) {
    for (auto i = std::size_t{0}; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (auto w = std::size_t{0}; w < workers; ++w) {
      pool.emplace_back([&] {
        for (auto i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) {
              error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace mobgap
