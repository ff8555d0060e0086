#include "hetlb/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hetlb {

unsigned worker_count() {
    if (const char* env = std::getenv("HETLB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), count);
    std::exception_ptr error;
    std::size_t error_index = count;
    std::mutex error_mutex;
    auto run = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run(i);
        if (error) std::rethrow_exception(error);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) run(i);
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace hetlb
