#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace qrisk {

inline std::size_t default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Static partition of [0, count) over `workers` threads. Each index gets
// its own deterministic work item, so the result is independent of the
// worker count as long as fn(i) writes only to slot i.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    workers = std::min(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([=] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace qrisk
