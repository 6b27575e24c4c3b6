#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ivope {

/// Calls f(i) for i in [0, n) on up to `workers` threads. Work is split into
/// contiguous blocks; callers write results into slot i so the outcome does
/// not depend on the worker count. The first exception is rethrown.
template <class F>
void parallel_for(int n, int workers, F&& f) {
    if (n <= 0) return;
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
        const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
        pool.emplace_back([&, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Default worker count: hardware concurrency, at least 1.
inline int default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace ivope
