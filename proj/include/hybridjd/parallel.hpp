#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hybridjd {

/// Splits [0, count) into contiguous chunks, one per worker, and runs
/// body(begin, end, worker) on each. Runs inline when one worker suffices.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        body(0, count, 0);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    auto guarded = [&](int begin, int end, int w) {
        try {
            body(begin, end, w);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        const int chunk = (count + workers - 1) / workers;
        for (int w = 1; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(count, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&guarded, begin, end, w] { guarded(begin, end, w); });
        }
        guarded(0, std::min(count, chunk), 0);
    }
    if (error) std::rethrow_exception(error);
}

/// Worker count from HYBRIDJD_THREADS, else the hardware concurrency.
int default_threads();

}  // namespace hybridjd
