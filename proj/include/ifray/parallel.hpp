// ifray - indoor factory ray-based channel simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ifray {

/// Worker cap: IFRAY_THREADS (if set) bounds hardware concurrency. Results
/// must not depend on its value; callers merge per-chunk results in index
/// order.
inline int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("IFRAY_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) hw = std::min(hw, cap);
    }
    return hw;
}

/// Runs fn(chunk_index, begin, end) over [0, n) split into deterministic
/// contiguous chunks. The chunking depends only on n and `chunks`, never on
/// the worker count.
template <typename F>
void parallel_chunks(std::size_t n, int chunks, F&& fn) {
    if (n == 0) return;
    chunks = std::max(1, std::min<int>(chunks, static_cast<int>(n)));
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    const std::size_t per = n / chunks, rem = n % chunks;
    std::size_t at = 0;
    for (int c = 0; c < chunks; ++c) {
        const std::size_t len = per + (static_cast<std::size_t>(c) < rem ? 1 : 0);
        ranges.emplace_back(at, at + len);
        at += len;
    }
    const int workers = std::min(worker_count(), chunks);
    if (workers <= 1) {
        for (int c = 0; c < chunks; ++c) fn(c, ranges[c].first, ranges[c].second);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int c = next.fetch_add(1); c < chunks; c = next.fetch_add(1))
                fn(c, ranges[static_cast<size_t>(c)].first, ranges[static_cast<size_t>(c)].second);
        });
    for (auto& t : pool) t.join();
}

} // namespace ifray
