#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>

#include <omp.h>

#include "tensmooth/field.hpp"

namespace tensmooth {

inline void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

inline int max_threads() { return omp_get_max_threads(); }

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot so the parallel result matches the serial one bit for bit.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Exceptions cannot cross the parallel region; the first one is kept and
  // rethrown once the loop has finished.
  const auto count = static_cast<std::int64_t>(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(tensmooth_for_each_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tensmooth
