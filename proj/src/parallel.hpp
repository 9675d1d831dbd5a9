#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pluripot::detail {

inline int thread_count() {
    const char* s = std::getenv("PLURIPOT_THREADS");
    if (!s) return 1;
    int n = std::atoi(s);
    return n < 1 ? 1 : (n > 64 ? 64 : n);
}

// Static contiguous chunks; each index is computed independently, so results do not
// depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    int nt = thread_count();
    if (nt == 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (std::size_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace pluripot::detail
