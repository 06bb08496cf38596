// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#include "gsc/parallel.hpp"

namespace gsc {

namespace {
int g_max_threads = 0; // 0 = hardware concurrency
} // namespace

void set_max_threads(int n) { g_max_threads = n < 0 ? 0 : n; }

int max_threads() {
    if (g_max_threads > 0)
        return g_max_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::size_t chunk_count(std::size_t n, std::size_t chunks) {
    if (n == 0)
        return 0;
    std::size_t c = chunks == 0 ? std::min<std::size_t>(64, n) : std::min(chunks, n);
    return std::max<std::size_t>(1, c);
}

void parallel_for_chunks(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                         std::size_t chunks) {
    if (end <= begin)
        return;
    const std::size_t n = end - begin;
    const std::size_t nchunks = chunk_count(n, chunks);
    const std::size_t base = n / nchunks;
    const std::size_t rem = n % nchunks;

    auto chunk_range = [&](std::size_t c, std::size_t& lo, std::size_t& hi) {
        // First `rem` chunks get one extra element.
        lo = begin + c * base + std::min(c, rem);
        hi = lo + base + (c < rem ? 1 : 0);
    };

    const int nthreads = std::min<int>(max_threads(), static_cast<int>(nchunks));
    if (nthreads <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c) {
            std::size_t lo, hi;
            chunk_range(c, lo, hi);
            body(c, lo, hi);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= nchunks)
                return;
            std::size_t lo, hi;
            chunk_range(c, lo, hi);
            body(c, lo, hi);
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads) - 1);
    for (int t = 1; t < nthreads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
}

} // namespace gsc
