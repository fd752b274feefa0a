#pragma once

#include <cstddef>
#include <functional>

namespace dynaweight {

// DYNAWEIGHT_THREADS when set (>= 1), otherwise hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Each index may only write its own outputs,
// so results are identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dynaweight
