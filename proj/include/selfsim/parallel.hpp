#pragma once

// Data-parallel helper for embarrassingly parallel loops.  Library functions
// that fan out over sample grids route through parallel_for; everything else
// stays single-threaded.  The SELFSIM_THREADS environment variable caps the
// worker count (1 disables threading entirely).  Work items write to disjoint
// preallocated slots, so results are bitwise independent of the worker count.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace selfsim {

inline unsigned thread_budget() {
    static const unsigned cached = [] {
        unsigned hw = std::thread::hardware_concurrency();
        if (hw == 0) hw = 1;
        if (const char* env = std::getenv("SELFSIM_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && v >= 1) hw = std::min<long>(v, 256);
        }
        return hw;
    }();
    return cached;
}

// body(i) is invoked exactly once for every i in [0, n).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(thread_budget(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace selfsim
