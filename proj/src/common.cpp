#include "revmap/common.hpp"

#include <algorithm>

namespace revmap {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int threads) { g_threads.store(std::max(0, threads)); }

int thread_count() {
    int t = g_threads.load();
    if (t > 0) return t;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int begin, int end, const std::function<void(int)>& body,
                  int grain) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = std::min(thread_count(), (count + grain - 1) / grain);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    std::atomic<int> next{begin};
    auto worker = [&]() {
        while (true) {
            int lo = next.fetch_add(grain);
            if (lo >= end) return;
            int hi = std::min(lo + grain, end);
            for (int i = lo; i < hi; ++i) body(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

} // namespace revmap
