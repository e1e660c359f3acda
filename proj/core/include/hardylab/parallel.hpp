#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hardylab {

// Worker count used by parallel_for; 1 runs inline. Results never depend on it.
void set_thread_count(int n);
int thread_count();

// Calls fn(i) for i in [0, n), splitting the range in contiguous blocks. The first exception
// (lowest block) is rethrown after all workers join.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  const std::size_t T = std::size_t(thread_count());
  if (T <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = T < n ? T : n;
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hardylab
