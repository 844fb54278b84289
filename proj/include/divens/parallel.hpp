#pragma once

#include <cstddef>
#include <functional>

namespace divens {

// Worker cap: DIVENS_THREADS (0 or unset = hardware concurrency), unless
// overridden with set_worker_count.
std::size_t worker_count();

// 0 restores the environment-derived default.
void set_worker_count(std::size_t n);

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks write to
// disjoint outputs, so results never depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace divens
