#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kepmix {

/// Runs fn(workerIndex, begin, end) over contiguous chunks of [0, n).
/// Chunk boundaries depend only on n and workers, so any per-worker partial
/// results can be merged in worker order for deterministic reductions.
/// The first exception thrown by a worker is rethrown after all join.
template <typename Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
    const std::size_t w =
        std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(n, 1));
    if (w <= 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + w - 1) / w;
    std::exception_ptr error;
    std::mutex errorMutex;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k) {
        const std::size_t b = k * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e)
            break;
        pool.emplace_back([&, k, b, e] {
            try {
                fn(k, b, e);
            } catch (...) {
                std::lock_guard lock(errorMutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace kepmix
