#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace blocksim {

// splitmix64; used to derive independent stream seeds from a master seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d4a68b021dfbd5ULL;
    return x ^ (x >> 31);
}

// Stream seed = master mixed with a role tag and a peer/replication id.
// Every consumer of randomness derives its own stream so that runs are
// reproducible regardless of evaluation order.
inline uint64_t derive_seed(uint64_t master, std::string_view role, uint64_t id = 0) {
    uint64_t h = master;
    for (char c : role)
        h = splitmix64(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
    return splitmix64(h ^ id);
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t master, std::string_view role, uint64_t id = 0) {
    return Rng(derive_seed(master, role, id));
}

// Uniform integer in [0, n).
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
    std::uniform_int_distribution<uint64_t> dist(0, n - 1);
    return dist(rng);
}

inline double uniform_real(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double exponential(Rng& rng, double rate) {
    std::exponential_distribution<double> dist(rate);
    return dist(rng);
}

// Exponential draw rounded up to a dyadic grid (multiples of 2^-20).
// Sums and shifts of such values are exact in double arithmetic, which
// keeps replayed schedules bit-stable under time translation.
inline double exponential_dyadic(Rng& rng, double rate) {
    constexpr double grid = 1048576.0;  // 2^20
    double t = exponential(rng, rate);
    double q = std::ceil(t * grid) / grid;
    if (q <= 0.0) q = 1.0 / grid;
    return q;
}

}  // namespace blocksim
