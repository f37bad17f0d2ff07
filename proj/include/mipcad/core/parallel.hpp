#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace mipcad {

// Runs fn(i) for i in [begin, end) across up to max_workers threads.
// Work items must be independent; output ordering is the caller's problem.
inline void parallel_for(int begin, int end, const std::function<void(int)>& fn,
                         int max_workers = 0) {
    const int n = end - begin;
    if (n <= 0) return;
    int hw = int(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    int workers = max_workers > 0 ? std::min(max_workers, hw) : hw;
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<int> next{begin};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < end; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace mipcad
