#include "kamred/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace kamred {

int worker_count() {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("KAMRED_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap >= 1) hw = std::min(hw, cap);
        } catch (...) {
        }
    }
    return hw;
}

void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t, int)>& body) {
    const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), std::max<std::int64_t>(1, n)));
    if (workers <= 1) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        std::int64_t b = n * w / workers, e = n * (w + 1) / workers;
        pool.emplace_back([&body, b, e, w] { body(b, e, w); });
    }
    for (auto& t : pool) t.join();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t lane) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(index * 0x100000001b3ULL + lane));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

} // namespace kamred
