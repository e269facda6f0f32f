#include "dyapack/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "dyapack/errors.hpp"

namespace dyapack {

namespace {
std::atomic<int> g_max_threads{1};
}

int max_threads() { return g_max_threads.load(); }

void set_max_threads(int n) {
  if (n < 1) fail(errc::range_error, "thread count must be >= 1");
  g_max_threads.store(n);
}

void parallel_for_index(int n, const std::function<void(int)>& f) {
  if (n <= 0) return;
  const int workers = std::min(max_threads(), n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }

  std::mutex mu;
  int first_failed = std::numeric_limits<int>::max();
  std::exception_ptr first_error;

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  // contiguous chunks: worker w handles [w*chunk, min((w+1)*chunk, n))
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (int i = lo; i < hi; ++i) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < first_failed) {
            first_failed = i;
            first_error = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dyapack
