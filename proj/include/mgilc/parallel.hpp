#pragma once

#include <cstddef>
#include <functional>

namespace mgilc {

// Worker count capped by MULTIGRID_ILC_THREADS when set. requested == 0 means hardware concurrency.
std::size_t worker_count(std::size_t requested = 0);

// Runs body(i) for i in [0, n). Exceptions are rethrown on the caller (lowest index first).
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace mgilc
