// Copyright Contributors to the tprim Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tprim {

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// workers (0 = hardware concurrency). Chunk boundaries depend only on n and
/// the worker count; callers that reduce results do so per item, never per
/// chunk, so output is independent of the schedule.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body &&body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        if (n > 0) body(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b >= e) break;
            pool.emplace_back([&, w, b, e] {
                try {
                    body(b, e);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto &err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace tprim
