#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace dnsfp {

// Runs fn(i) for i in [0, n). Work items must be independent; outputs they
// write must not alias. n_threads <= 1 runs inline.
template <class Fn>
void parallel_for(size_t n, int n_threads, Fn&& fn) {
    if (n_threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    const size_t workers = std::min<size_t>(n_threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace dnsfp
