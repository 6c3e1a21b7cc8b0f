#pragma once
// Static range partitioning across hardware threads. Workers must write only
// to disjoint per-index slots; results are then independent of thread count.
// The first exception thrown by any worker is rethrown on the calling thread.

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rcps::detail {

template <typename Fn>
void parallel_for(std::size_t total, Fn&& fn) {
    const std::size_t hw = std::thread::hardware_concurrency();
    const std::size_t workers = std::min(total, hw == 0 ? std::size_t{1} : hw);
    if (workers <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mu;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < total && !failed.load(std::memory_order_relaxed);
                     i += workers) {
                    fn(i);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace rcps::detail
