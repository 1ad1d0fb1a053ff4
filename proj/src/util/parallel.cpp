#include "latnet/util/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace latnet::util {
namespace {

int initial_thread_count() {
    if (const char* env = std::getenv("LATNET_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

std::atomic<int>& threads() {
    static std::atomic<int> n{initial_thread_count()};
    return n;
}

}  // namespace

int thread_count() { return threads().load(); }

void set_thread_count(int n) { threads().store(std::max(1, n)); }

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& chunk) {
    if (end <= begin) return;
    const std::size_t total = end - begin;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), total);
    if (workers <= 1) {
        chunk(begin, end);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t per = (total + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t lo = begin + w * per;
        const std::size_t hi = std::min(end, lo + per);
        if (lo < hi) pool.emplace_back([&chunk, lo, hi] { chunk(lo, hi); });
    }
    chunk(begin, std::min(end, begin + per));
}

}  // namespace latnet::util
