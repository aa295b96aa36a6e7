#pragma once

#include <cstdint>
#include <functional>

namespace cortex {

// Number of worker threads. Defaults to the hardware concurrency, capped by
// the CORTEX_THREADS environment variable when set.
int worker_count();

// Overrides the worker count for the rest of the process (0 = reset to the
// environment default). Mainly for tests and benchmarks.
void set_worker_count(int n);

// Runs fn(begin, end) over disjoint chunks of [0, n) on the worker pool and
// blocks until all chunks finish. Nested calls run inline on the caller.
//
// Results must not depend on the chunking: callers write disjoint outputs and
// keep any per-element accumulation sequential, which makes every kernel in
// this library bit-reproducible for any thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace cortex
