#pragma once

// Deterministic fan-out over independent tasks. Each task writes only its own slot, so the
// output does not depend on the number of workers or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "prodspec/core.hpp"

#ifdef PRODSPEC_OPENBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace prodspec {

/// Worker count: PRODSPEC_THREADS if set (>= 1), else hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PRODSPEC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw config_error(std::string("PRODSPEC_THREADS must be a positive integer, got '") +
                               env + "'");
        return static_cast<unsigned>(v);
    }
    return hw;
}

/// Keeps the BLAS backend single-threaded; parallelism lives at the trial level.
inline void pin_blas_threads() {
#ifdef PRODSPEC_OPENBLAS
    openblas_set_num_threads(1);
#endif
}

/// Calls fn(i) for i in [0, count). The first exception thrown by any task is rethrown.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned workers = 0) {
    if (workers == 0) workers = worker_count();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// parallel_for collecting one result per index, in index order.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, Fn&& fn, unsigned workers = 0) {
    std::vector<T> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = fn(i); }, workers);
    return out;
}

}  // namespace prodspec
