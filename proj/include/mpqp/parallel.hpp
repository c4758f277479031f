#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mpqp {

// Number of worker threads used when jobs == 0 (library default).
inline int hardware_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs f(i) for i in [0, n). jobs == 1 executes the plain serial loop
// (the reference path used by the determinism tests); jobs == 0 uses the
// OpenMP default thread count. Results must be written to disjoint slots
// so the outcome is independent of scheduling.
template <class F>
void parallel_for(std::size_t n, F&& f, int jobs = 0) {
  if (n == 0) return;
#ifdef _OPENMP
  if (jobs != 1 && n > 1) {
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      f(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)jobs;
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

}  // namespace mpqp
