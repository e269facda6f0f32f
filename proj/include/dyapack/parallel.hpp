#pragma once

#include <functional>

namespace dyapack {

// Global worker cap for the optional shared-memory parallelism.  Default is 1
// (fully serial).  Every parallel loop in the library writes to disjoint
// slots and fixes its per-index accumulation order, so results are identical
// for any thread count.
int max_threads();
void set_max_threads(int n);

// Runs f(i) for i in [0, n), splitting the range into contiguous chunks over
// at most max_threads() workers.  Exceptions are captured per index and the
// one with the smallest index is rethrown, so failures are deterministic too.
void parallel_for_index(int n, const std::function<void(int)>& f);

template <class F>
void parallel_for(int n, F&& f) {
  parallel_for_index(n, std::function<void(int)>(std::forward<F>(f)));
}

}  // namespace dyapack
