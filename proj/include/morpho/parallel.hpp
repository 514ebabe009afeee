#pragma once

#include <cstddef>
#include <functional>

namespace morpho {

// Worker count: MORPHO_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

// Runs body(i) for i in [0, n). Bodies must write to disjoint state; results are
// then independent of scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace morpho
