#pragma once

#include <cstddef>
#include <functional>

namespace featrisk {

// Runs body(i) for i in [0, count) on up to `threads` workers. Workers pull
// indices from a shared counter, so load balances itself; callers write
// results into per-index slots and reduce afterwards in index order, which
// keeps the output independent of the thread count. If any body throws, the
// exception from the smallest failing index is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// 0 or negative means "use hardware concurrency".
int resolve_threads(int requested);

}  // namespace featrisk
