#pragma once

#include <cstdint>
#include <functional>

namespace tenf {

// Worker count from the TENF_THREADS environment variable (default 1).
int thread_count();

// Runs fn(i) for i in [0, n) split into contiguous chunks across
// thread_count() workers. Iterations must write to disjoint locations;
// results are then independent of the thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)> &fn);

} // namespace tenf
