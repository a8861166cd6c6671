#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rilab {

// Calls f(i) for i in [0, n) on `threads` workers. Work is handed out in
// index order but results must be written to slot i by f, so the outcome
// does not depend on the number of workers. The first exception is rethrown.
template <class F>
void parallel_for(std::uint64_t n, unsigned threads, F&& f) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        for (std::uint64_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::mutex mu;
    std::uint64_t next = 0;
    std::exception_ptr err;
    auto worker = [&] {
        while (true) {
            std::uint64_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= n || err) return;
                i = next++;
            }
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::uint64_t>(threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace rilab
