#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace tcnn {

// Process-wide worker count for parallel_for. 1 disables threading entirely.
// 0 means "use hardware_concurrency".
inline int& thread_count() {
    static int n = 1;
    return n;
}

inline void set_thread_count(int n) {
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    thread_count() = n;
}

// Runs fn(i) for i in [0, n). Each index must write disjoint state and keep a
// fixed internal accumulation order, which makes results bit-identical for
// every worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = std::min<int>(thread_count(), static_cast<int>(n));
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace tcnn
