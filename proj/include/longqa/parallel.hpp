#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace longqa {

// Runs fn(i) for i in [0, n) on at most `parallelism` threads. If any call
// throws, remaining work is abandoned and the exception from the lowest
// failing index is rethrown, so failures are reported deterministically.
template <class Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
    if (n == 0) return;
    const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();  // joins
    if (error) std::rethrow_exception(error);
}

}  // namespace longqa
