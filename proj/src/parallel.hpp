#pragma once

#include <atomic>
#include <exception>

namespace rte::detail {

// body(i) for i in [0, n) over OpenMP threads. An exception escaping an
// OpenMP region terminates the process, so the first one is kept and
// rethrown on the calling thread after the loop; later iterations are skipped.
template <class Body>
void parallel_for(long n, int chunk, Body&& body) {
  std::exception_ptr error;
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic, chunk)
  for (long i = 0; i < n; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      body(i);
    } catch (...) {
#pragma omp critical(rte_parallel_for_error)
      {
        if (!error) error = std::current_exception();
      }
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace rte::detail
