#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace hmkl {

// Process-wide worker cap, settable from the CLI (--jobs).
int default_jobs();
void set_default_jobs(int jobs);

// Runs fn(0..n-1) on up to `jobs` threads.  Each index is processed exactly
// once; callers store results by index, so the outcome does not depend on
// scheduling.  Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int jobs = 0);

}  // namespace hmkl
