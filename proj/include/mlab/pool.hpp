// Minimal worker pool: jobs are indexed, results land in caller-owned slots,
// so reports never depend on scheduling order.
#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mlab {

inline int default_workers() {
    if (const char* env = std::getenv("MLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

// Runs job(0..n_jobs-1) on `workers` threads. Exceptions propagate after join.
inline void run_indexed(int n_jobs, int workers, const std::function<void(int)>& job) {
    if (workers <= 1 || n_jobs <= 1) {
        for (int i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(size_t(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            try {
                while (true) {
                    const int i = next.fetch_add(1);
                    if (i >= n_jobs) break;
                    job(i);
                }
            } catch (...) {
                errors[size_t(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace mlab
