#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hklab {

/// Worker count: hardware concurrency, capped by HKLAB_THREADS when set.
inline unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HKLAB_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
        }
    }
    return hw;
}

/// Runs body(begin, end, worker) on contiguous chunks of [0, count). The
/// chunking depends only on (count, workers); callers that reduce per chunk
/// and then across chunks in chunk order get results independent of timing.
template <typename Body>
void parallel_chunks(std::size_t count, unsigned workers, Body&& body)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        body(std::size_t{0}, count, 0u);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = std::min(count, w * chunk);
        const std::size_t e = std::min(count, b + chunk);
        pool.emplace_back([&, b, e, w] {
            try {
                body(b, e, w);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace hklab
