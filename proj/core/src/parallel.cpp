#include "hardylab/parallel.hpp"

#include <atomic>

namespace hardylab {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) {
  if (n <= 0) n = int(std::thread::hardware_concurrency());
  g_threads.store(n < 1 ? 1 : n);
}

int thread_count() { return g_threads.load(); }

}  // namespace hardylab
