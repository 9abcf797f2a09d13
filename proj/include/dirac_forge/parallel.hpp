#pragma once

#include <cstddef>
#include <functional>

namespace dirac_forge {

// DIRAC_FORGE_THREADS caps the worker count; unset means hardware concurrency
std::size_t worker_count();

// fn(i) for i in [0, n); results must be written to per-index slots by the caller.
// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dirac_forge
