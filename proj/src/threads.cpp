#include "tenf/threads.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace tenf {

int thread_count()
{
  static const int count = [] {
    if (const char *env = std::getenv("TENF_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) {
        return n;
      }
    }
    return 1;
  }();
  return count;
}

void parallel_for(int64_t n, const std::function<void(int64_t)> &fn)
{
  const int workers = thread_count();
  if (workers <= 1 || n < 2) {
    for (int64_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  const int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    const int64_t lo = w * chunk;
    const int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) {
      break;
    }
    pool.emplace_back([lo, hi, &fn] {
      for (int64_t i = lo; i < hi; ++i) {
        fn(i);
      }
    });
  }
  for (std::thread &t : pool) {
    t.join();
  }
}

} // namespace tenf
