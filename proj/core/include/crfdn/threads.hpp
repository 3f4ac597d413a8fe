#pragma once

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace crfdn {

inline int resolve_threads(int threads) {
    if (threads > 0) return threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static block partition of [0, n) over the given worker count. Each index is
// processed exactly once with no shared mutable state, so results written to
// per-index slots are identical for any thread count. The lowest-index
// exception wins, keeping error reporting deterministic too.
template <typename Fn>
void parallel_for(int64_t n, int threads, const Fn& fn) {
    threads = resolve_threads(threads);
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (static_cast<int64_t>(threads) > n) threads = static_cast<int>(n);

    std::vector<std::exception_ptr> errs(static_cast<size_t>(threads));
    std::vector<int64_t> err_at(static_cast<size_t>(threads), -1);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    const int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int64_t lo = t * chunk;
        const int64_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, t, lo, hi]() {
            for (int64_t i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errs[static_cast<size_t>(t)] = std::current_exception();
                    err_at[static_cast<size_t>(t)] = i;
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();

    int64_t first = -1;
    int which = -1;
    for (int t = 0; t < threads; ++t) {
        if (errs[static_cast<size_t>(t)] && (first < 0 || err_at[static_cast<size_t>(t)] < first)) {
            first = err_at[static_cast<size_t>(t)];
            which = t;
        }
    }
    if (which >= 0) std::rethrow_exception(errs[static_cast<size_t>(which)]);
}

}  // namespace crfdn
