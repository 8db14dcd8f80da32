#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ousv {

/// Worker count: explicit request wins, then the ENGINE_THREADS environment
/// variable, then hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ENGINE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Number of fixed work blocks for n items. Depends only on n, never on the
/// worker count, so per-block results can be merged in block order and the
/// aggregate is bit-identical for any --threads value.
inline int block_count(std::int64_t n_items) {
    constexpr int kBlocks = 256;
    if (n_items <= 0) return 0;
    return n_items < kBlocks ? static_cast<int>(n_items) : kBlocks;
}

/// Runs fn(block_index, first_item, last_item) over a fixed partition of
/// [0, n_items). Blocks are claimed dynamically by the workers; fn must
/// write only to per-block state.
template <class Fn>
void for_each_block(std::int64_t n_items, int threads, Fn&& fn) {
    const int nblocks = block_count(n_items);
    if (nblocks == 0) return;
    const int nthreads = std::min(resolve_threads(threads), nblocks);

    auto run_block = [&](int b) {
        const std::int64_t first = n_items * b / nblocks;
        const std::int64_t last = n_items * (b + 1) / nblocks;
        fn(b, first, last);
    };

    if (nthreads <= 1) {
        for (int b = 0; b < nblocks; ++b) run_block(b);
        return;
    }

    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int b = next.fetch_add(1);
                if (b >= nblocks) return;
                run_block(b);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace ousv
