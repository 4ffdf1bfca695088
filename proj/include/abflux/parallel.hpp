#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace abflux {

namespace detail {
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0};
    return cap;
}
}  // namespace detail

// 0 restores the default (machine parallelism).
inline void set_threads(int k) { detail::thread_cap() = std::max(0, k); }

inline int threads() {
    int k = detail::thread_cap();
    if (k > 0) return k;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Static block partition of [0, n); each index is visited exactly once, so
// results written by index are independent of the worker count.
template <class F>
void parallel_for(size_t n, F&& fn) {
    const size_t k = std::min<size_t>(static_cast<size_t>(threads()), n);
    if (k <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (size_t t = 0; t < k; ++t) {
        size_t lo = n * t / k, hi = n * (t + 1) / k;
        pool.emplace_back([&fn, lo, hi] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace abflux
