#pragma once

#include <functional>

namespace opweight {

// Resolved thread count: OPWEIGHT_THREADS env var, where 0 or unset means the
// OpenMP default and 1 forces serial execution.
int thread_count();

// Serial reference kernel driver; kept as the comparison baseline for tests
// and benchmarks.
void serial_for(int n, const std::function<void(int)>& body);

// Data-parallel loop. Bodies must write disjoint slots only; with that
// discipline results are bit-identical for every thread count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace opweight
