#pragma once

#include <exception>
#include <functional>

namespace etacurv {

/// Worker count used by per-node maps; 0 selects hardware concurrency.
void set_thread_count(int threads);
[[nodiscard]] int thread_count();

/// Calls body(i) for i in [0, count). Work is split into contiguous chunks;
/// when several indices throw, the exception from the lowest index is
/// rethrown so failures are reported deterministically.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace etacurv
