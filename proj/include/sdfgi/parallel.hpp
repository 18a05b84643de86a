#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace sdfgi {

inline int hardwareThreads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Strided parallel loop: worker w owns indices begin+w, begin+w+W, ... which
// balances workloads whose cost drifts across the range (image rows, probe
// lists). Workers write only to their own indices, so results do not depend on
// the thread count.
inline void parallelFor(int64_t begin, int64_t end, int numThreads,
                        const std::function<void(int64_t, int)>& body) {
    int64_t n = end - begin;
    if (n <= 0) return;
    int workers = static_cast<int>(std::min<int64_t>(std::max(1, numThreads), n));
    if (workers == 1) {
        for (int64_t i = begin; i < end; ++i) body(i, 0);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([=, &body] {
            for (int64_t i = begin + w; i < end; i += workers) body(i, w);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace sdfgi
