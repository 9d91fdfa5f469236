#pragma once

#include <cstdint>
#include <functional>

namespace deft {

// Kernel thread cap. Defaults to the DEFT_THREADS environment variable, or 1.
int num_threads();
void set_num_threads(int n);

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; each index
// runs exactly once, so kernels that write disjoint outputs per index stay
// bitwise identical for any thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace deft
