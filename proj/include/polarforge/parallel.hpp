#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace polarforge {

inline unsigned default_jobs() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Runs body(acc, t) for t in [begin, end) on up to `jobs` threads.
///
/// Each worker owns an Acc built by make(); workers take contiguous chunks and the
/// per-chunk accumulators are merged in chunk order, so an associative merge gives
/// a result that does not depend on `jobs`.
template <class Acc, class Make, class Body, class Merge>
Acc parallel_trials(std::size_t begin, std::size_t end, unsigned jobs, Make make, Body body, Merge merge) {
    Acc total = make();
    if (end <= begin) return total;
    std::size_t n = end - begin;
    jobs = std::max(1u, jobs);
    if (jobs == 1 || n < 2) {
        for (std::size_t t = begin; t < end; ++t) body(total, t);
        return total;
    }
    std::size_t chunk = std::max<std::size_t>(1, (n + 8 * jobs - 1) / (8 * jobs));
    std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<Acc> parts;
    parts.reserve(nchunks);
    for (std::size_t c = 0; c < nchunks; ++c) parts.push_back(make());
    std::size_t next = 0;
    std::mutex mu;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            std::size_t c;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (next >= nchunks || err) return;
                c = next++;
            }
            try {
                std::size_t lo = begin + c * chunk, hi = std::min(end, lo + chunk);
                for (std::size_t t = lo; t < hi; ++t) body(parts[c], t);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(jobs, nchunks));
    for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    for (auto& p : parts) merge(total, p);
    return total;
}

}  // namespace polarforge
