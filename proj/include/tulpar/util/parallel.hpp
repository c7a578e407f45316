#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace tulpar::util {

// Applies `fn` to every index in [0, n) using `workers` threads and returns
// results in input order. With workers <= 1 runs inline; results are
// identical either way since each slot is written independently.
template <typename Result, typename Fn>
std::vector<Result> parallel_map_ordered(size_t n, int workers, Fn fn) {
    std::vector<Result> out(n);
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const size_t nthreads = std::min<size_t>(static_cast<size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (size_t i = t; i < n; i += nthreads) out[i] = fn(i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace tulpar::util
