#pragma once

#include <cstddef>
#include <functional>

namespace latnet::util {

/// Worker count used by parallel loops. Defaults to $LATNET_THREADS, else 1.
int thread_count();
void set_thread_count(int n);

/// Splits [begin, end) into contiguous chunks, one per worker. Each index is
/// visited exactly once; work per index must be independent so the result
/// does not depend on the worker count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& chunk);

}  // namespace latnet::util
