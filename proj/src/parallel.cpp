#include "esw/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace esw {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ESW_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0) return w;
        } catch (...) {
        }
    }
    return 1;
}

void parallel_for_worker(std::size_t count, int workers,
                         const std::function<void(std::size_t, int)>& fn) {
    if (count == 0) return;
    const int n_threads = static_cast<int>(
        std::min<std::size_t>(count, static_cast<std::size_t>(workers > 0 ? workers : 1)));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i, 0);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) break;
                    fn(i, w);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    parallel_for_worker(count, workers, [&fn](std::size_t i, int) { fn(i); });
}

} // namespace esw
