#pragma once

#include <cstddef>
#include <exception>
#include <utility>

namespace lure {

// Execution policy for data-parallel kernels. `serial` is the reference path;
// every parallel kernel must produce bit-identical results to it.
enum class Exec { serial, parallel };

// Calls fn(i) for i in [0, n). Under Exec::parallel iterations run on the
// OpenMP team; the first exception thrown is rethrown on the caller.
template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(lure_for_each_index)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int max_threads();

}  // namespace lure
