#pragma once

#include <cstddef>
#include <functional>

namespace tstlab {

//! Worker count: TSTLAB_THREADS if set and positive, else the hardware count.
int thread_count();

//! Runs f(0..n-1) on up to `threads` workers (0 = thread_count()). Results
//! must be written by index. The exception of the lowest failing index is
//! rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int threads = 0);

}  // namespace tstlab
