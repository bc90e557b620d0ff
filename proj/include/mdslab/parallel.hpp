#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdslab {

/// Number of worker threads used when a caller passes workers <= 0.
inline int default_workers() noexcept {
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}

/// body(i) for i in [0, count) on `workers` threads. Each index must write
/// only its own output slot; results are then independent of scheduling.
template <class Body>
void parallel_for(std::size_t count, Body &&body, int workers) {
  const int threads = workers > 0 ? workers : default_workers();
  const auto last = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < last; ++i)
    body(static_cast<std::size_t>(i));
  (void)threads;
}

/// Serial reference for parallel_for.
template <class Body> void serial_for(std::size_t count, Body &&body) {
  for (std::size_t i = 0; i < count; ++i)
    body(i);
}

} // namespace mdslab
