#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ink/error.hpp"

namespace ink {

// --jobs wins over INK_JOBS; 0 means "hardware concurrency".
inline unsigned resolve_jobs(unsigned cli_jobs) {
    unsigned jobs = cli_jobs;
    if (jobs == 0) {
        if (const char* env = std::getenv("INK_JOBS"); env && *env) {
            try {
                jobs = static_cast<unsigned>(std::stoul(env));
            } catch (const std::exception&) {
                throw ConfigError(std::string("INK_JOBS is not a number: ") + env);
            }
        }
    }
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    return jobs;
}

// Calls fn(i) for i in [0, n) on up to `jobs` threads. Results must be
// written to preallocated slots so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace ink
