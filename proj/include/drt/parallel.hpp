#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace drt {

// Runs fn(i) for i in [0, count) on a transient thread pool. Work items must
// write only to disjoint state; callers reduce any per-item results in index
// order afterwards, which keeps outputs independent of the schedule.
template <class Fn>
inline void parallel_for(size_t count, Fn&& fn, unsigned num_threads = 0) {
    if (count == 0) return;
    if (num_threads == 0) num_threads = std::thread::hardware_concurrency();
    if (num_threads <= 1 || count == 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    num_threads = unsigned(std::min<size_t>(num_threads, count));
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(num_threads);
    for (unsigned t = 0; t < num_threads; ++t) {
        workers.emplace_back([&]() {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace drt
