#pragma once

// Deterministic parallel map: job i always writes slot i, so results do not
// depend on the number of workers or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace hardylab::parallel {

/// Worker count from HARDYLAB_WORKERS, else 1.
inline int default_workers() {
  if (const char* env = std::getenv("HARDYLAB_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

/// Runs f(i) for i in [0, n) on up to `workers` threads. If jobs throw, the
/// exception of the lowest failing index is rethrown.
template <class R, class F>
std::vector<R> map(std::size_t n, int workers, F&& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace hardylab::parallel
