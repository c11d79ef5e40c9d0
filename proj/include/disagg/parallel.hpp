#pragma once

#include <cstddef>
#include <functional>

namespace disagg {

/// Worker count: DISAGG_THREADS when set and positive, otherwise the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs exactly once;
/// the first exception thrown is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = worker_count());

}  // namespace disagg
