#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace primestat {

/// 0 means "use hardware parallelism".
inline unsigned resolve_workers(unsigned requested)
{
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(index, worker) for every index in [0, n) on a bounded pool.
/// Indices are handed out dynamically, so callers must write results by
/// index (never by completion order) to stay deterministic. The first
/// exception thrown by any task is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn)
{
    const std::size_t pool_size = std::min<std::size_t>(resolve_workers(workers), n);
    if (pool_size <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, 0u);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(pool_size);
        for (unsigned w = 0; w < pool_size; ++w) {
            pool.emplace_back([&, w] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n) return;
                    try {
                        fn(i, w);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next.store(n);
                        return;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace primestat
