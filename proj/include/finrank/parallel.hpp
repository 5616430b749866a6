#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace finrank {

/// Deterministic data-parallel map: f(i) is called exactly once for every
/// i in [0, count); workers own contiguous chunks and must write results by
/// index into preallocated storage. threads == 0 picks hardware concurrency.
template <class F>
void parallel_for(std::size_t count, F&& f, unsigned threads = 0) {
    if (count == 0) return;
    unsigned n = threads ? threads : std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (n > count) n = static_cast<unsigned>(count);
    if (n == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (count + n - 1) / n;
    for (unsigned w = 0; w < n; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace finrank
