#pragma once

#include <cstddef>
#include <functional>

// Minimal worker-count-independent parallel loop.  Results must be written to
// preallocated slots indexed by the loop variable, so serial and parallel
// execution produce identical output.

namespace nucx {

// Worker cap: 0 = hardware concurrency.  Settable via the CLI --threads flag
// or the NUCX_THREADS environment variable; reads fall back to the
// environment on first use.
void set_thread_count(int n);
int thread_count();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace nucx
