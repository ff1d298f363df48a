#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mapfuse {

// Runs fn(begin, end) over a partition of [0, n) on `threads` workers.
// Callers own determinism: each index must be written by exactly one worker.
inline void parallel_for_ranges(std::size_t n, unsigned threads,
                                const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

} // namespace mapfuse
