#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

#include "vkt/execution_policy.hpp"

namespace vkt {

/// Runs body(i) for every i in [begin, end) on the current policy's workers.
/// Indices are handed out in chunks of `grain`; each index runs exactly once.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Body>
void parallelFor(std::int64_t begin, std::int64_t end, std::int64_t grain, Body&& body) {
    if (end <= begin)
        return;
    grain = std::max<std::int64_t>(1, grain);
    const std::int64_t chunks = (end - begin + grain - 1) / grain;
    const int workers = int(std::min<std::int64_t>(effectiveWorkerCount(), chunks));

    if (workers <= 1) {
        for (std::int64_t i = begin; i < end; ++i)
            body(i);
        return;
    }

    // Worker threads inherit the caller's policy so nested algorithms agree.
    const ExecutionPolicy policy = getExecutionPolicy();
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failureMutex;

    auto work = [&] {
        try {
            for (;;) {
                std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
                if (c >= chunks)
                    break;
                std::int64_t lo = begin + c * grain;
                std::int64_t hi = std::min(end, lo + grain);
                for (std::int64_t i = lo; i < hi; ++i)
                    body(i);
            }
        } catch (...) {
            std::lock_guard lock(failureMutex);
            if (!failure)
                failure = std::current_exception();
            next.store(chunks);
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (int w = 1; w < workers; ++w)
            pool.emplace_back([&] {
                setExecutionPolicy(policy);
                work();
            });
        work();
    }
    if (failure)
        std::rethrow_exception(failure);
}

/// Deterministic reduction: [0, count) is cut into fixed blocks of
/// `blockSize` (independent of worker count); block partials are computed in
/// parallel and combined in a balanced binary tree over block order.
template <typename T, typename BlockFn, typename CombineFn>
T blockReduce(std::int64_t count, std::int64_t blockSize, T identity, BlockFn&& blockFn,
              CombineFn&& combine) {
    if (count <= 0)
        return identity;
    const std::int64_t blocks = (count + blockSize - 1) / blockSize;
    std::vector<T> partial(std::size_t(blocks), identity);
    parallelFor(0, blocks, 1, [&](std::int64_t b) {
        std::int64_t lo = b * blockSize;
        partial[std::size_t(b)] = blockFn(lo, std::min(count, lo + blockSize));
    });

    std::function<T(std::int64_t, std::int64_t)> tree = [&](std::int64_t lo, std::int64_t hi) -> T {
        if (hi - lo == 1)
            return partial[std::size_t(lo)];
        std::int64_t mid = lo + (hi - lo) / 2;
        return combine(tree(lo, mid), tree(mid, hi));
    };
    return tree(0, blocks);
}

/// Prints "[vkt] <name>: <ms> ms" to stderr on destruction when the current
/// policy has printTimings set.
class ScopedTimer {
public:
    explicit ScopedTimer(std::string_view name);
    ~ScopedTimer();

    ScopedTimer(const ScopedTimer&) = delete;
    ScopedTimer& operator=(const ScopedTimer&) = delete;

private:
    std::string_view name_;
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace vkt
