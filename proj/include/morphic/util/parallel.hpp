#pragma once

#include <cstddef>
#include <functional>

namespace morphic::util {

// Runs fn(i) once for every i in [0, n) on `workers` threads (inline when
// workers <= 1). Work is handed out through an atomic counter, so callers
// must keep fn(i) a pure function of i (write results into slot i); that is
// what makes every pipeline output independent of the worker count.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace morphic::util
