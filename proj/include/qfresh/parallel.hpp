#pragma once

#include <functional>

namespace qfresh {

// Worker count from QFRESH_THREADS, else the hardware concurrency.
int thread_count();

// Runs body(k) for k in [0, n) across thread_count() workers. The first
// exception thrown by any worker is rethrown in the caller.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace qfresh
