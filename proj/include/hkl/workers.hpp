#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace hkl {

// Worker count from HKL_WORKERS, else hardware concurrency.
int worker_count();

// Runs fn(tile) for tile in [0, n_tiles). Tiles are fixed by the caller, so any
// reduction done afterwards in tile order is independent of the worker count.
template <class F>
void for_each_tile(std::size_t n_tiles, F&& fn) {
    std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n_tiles);
    if (nw <= 1) {
        for (std::size_t i = 0; i < n_tiles; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n_tiles; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace hkl
