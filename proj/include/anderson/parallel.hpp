#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace anderson {

// results[i] = task(i) for i in [0, n), computed by `workers` threads pulling
// indices from a shared counter. The output is independent of the worker count
// as long as task(i) is a pure function of i.
template <typename Task>
auto parallel_map(std::size_t n, int workers, Task&& task) -> std::vector<decltype(task(std::size_t{}))>
{
    using Result = decltype(task(std::size_t{}));
    std::vector<Result> results(n);
    const int threads = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i)
            results[i] = task(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                results[i] = task(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(failure_lock);
                if (!failure)
                    failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& thread : pool)
        thread.join();
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

} // namespace anderson
