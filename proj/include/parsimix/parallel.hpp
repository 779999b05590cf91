#ifndef PARSIMIX_PARALLEL_HPP
#define PARSIMIX_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace parsimix {

// Thread cap: min(PARSIMIX_THREADS, hardware_concurrency), at least 1.
inline int max_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("PARSIMIX_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) return static_cast<int>(cap);
  }
  return static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Results must be written to preallocated
// per-index slots by the caller; the loop itself imposes no ordering.
// Exceptions are captured and the first one (lowest index) is rethrown.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int nthreads = std::min(max_threads(), n);
  if (nthreads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace parsimix

#endif
