#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thermocolor::parallel {

namespace detail {
inline std::atomic<unsigned>& thread_count_storage() {
    static std::atomic<unsigned> count{1};
    return count;
}
} // namespace detail

/// Worker count used by every parallel kernel. 1 selects the deterministic
/// single-threaded mode.
inline unsigned thread_count() { return detail::thread_count_storage().load(); }

/// 0 means "use hardware concurrency".
inline void set_thread_count(unsigned n) {
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    detail::thread_count_storage().store(n);
}

/// Splits [begin, end) into contiguous chunks, one per worker, and calls
/// fn(chunk_begin, chunk_end, worker_index). Chunks are assigned in order so
/// callers can reduce per-worker partials deterministically.
template <typename Fn>
void for_chunks(std::size_t begin, std::size_t end, Fn&& fn) {
    if (end <= begin) return;
    const std::size_t n = end - begin;
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        fn(begin, end, std::size_t{0});
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&](std::size_t w) {
        const std::size_t lo = begin + n * w / workers;
        const std::size_t hi = begin + n * (w + 1) / workers;
        try {
            fn(lo, hi, w);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Number of chunks for_chunks will use for a range of size n.
inline std::size_t chunk_count(std::size_t n) {
    return std::max<std::size_t>(1, std::min<std::size_t>(thread_count(), n));
}

} // namespace thermocolor::parallel
