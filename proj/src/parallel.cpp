#include "properuq/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace properuq {
namespace {

int resolve_default_threads() {
    if (const char* env = std::getenv("PROPER_UQ_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::atomic<int> g_max_threads{0};  // 0 = unresolved, use default

}  // namespace

void set_max_threads(int n) {
    g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

int max_threads() {
    int n = g_max_threads.load(std::memory_order_relaxed);
    return n > 0 ? n : resolve_default_threads();
}

void parallel_for_blocks(std::int64_t count, std::int64_t block_size,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (count <= 0) return;
    if (block_size < 1) block_size = 1;
    std::int64_t blocks = (count + block_size - 1) / block_size;
    int workers = std::min<std::int64_t>(max_threads(), blocks);
    if (workers <= 1) {
        for (std::int64_t b = 0; b < blocks; ++b) {
            std::int64_t begin = b * block_size;
            fn(begin, std::min(begin + block_size, count));
        }
        return;
    }
    // Each block runs entirely on one worker, so per-block results are
    // identical for every worker count; callers combine them in block order.
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
                if (b >= blocks) return;
                std::int64_t begin = b * block_size;
                fn(begin, std::min(begin + block_size, count));
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace properuq
