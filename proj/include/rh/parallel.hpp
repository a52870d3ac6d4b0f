#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace rh {

inline int resolve_workers(int requested, std::int64_t n) {
    int w = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (w < 1) w = 1;
    if (static_cast<std::int64_t>(w) > n) w = static_cast<int>(n);
    return w;
}

// Static contiguous partition of [0, n): worker boundaries never influence
// which substream a path uses, so results are independent of the worker count.
// Exceptions from the body are captured per path and the lowest-index one is
// rethrown after the join, which keeps failures deterministic too.
inline void parallel_paths(std::int64_t n, int workers,
                           const std::function<void(std::int64_t)>& body) {
    const int w = resolve_workers(workers, n);
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
    auto guarded = [&](std::int64_t i) {
        try {
            body(i);
        } catch (...) {
            errs[static_cast<std::size_t>(i)] = std::current_exception();
        }
    };
    if (w == 1) {
        for (std::int64_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(w));
        const std::int64_t chunk = (n + w - 1) / w;
        for (int k = 0; k < w; ++k) {
            const std::int64_t lo = k * chunk;
            const std::int64_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([lo, hi, &guarded] {
                for (std::int64_t i = lo; i < hi; ++i) guarded(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (const std::exception_ptr& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace rh
