#pragma once

// Slot-indexed parallel loop: each task writes only its own outputs, so
// results are identical for any thread count.

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace aniso {

inline int default_threads() {
    if (const char* env = std::getenv("ANISO_HARDY_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

template <class Fn>
void parallel_for(std::size_t count, const Fn& fn, int threads = 0) {
    if (threads <= 0) threads = default_threads();
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < count; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace aniso
