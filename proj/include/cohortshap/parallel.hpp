#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace cohortshap {

// Worker count used by every parallel loop in the library. Results never
// depend on it: loops write per-index outputs and reductions run in a fixed
// order afterwards.
inline void set_worker_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}
inline int worker_threads() { return omp_get_max_threads(); }

// Runs f(i) for i in [0, n). The first exception thrown by any iteration is
// rethrown on the calling thread once the loop has finished.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cohortshap
