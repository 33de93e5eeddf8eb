#pragma once

#include <cstdint>
#include <functional>

namespace kamred {

// Worker count: hardware concurrency, capped by KAMRED_THREADS when set.
int worker_count();

// Calls body(begin, end) on contiguous chunks of [0, n); chunk boundaries depend only on n and the worker count.
void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t, int)>& body);

// Counter-based uniform variate in [0, 1) for (seed, index, lane).
double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t lane);

std::uint64_t splitmix64(std::uint64_t x);

} // namespace kamred
