#pragma once

#include <cstdint>
#include <random>

namespace poissonopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic random stream: one seed, one sequence. Sub-streams for
// per-epicenter draws come from derive(), never from reseeding in place.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed)
        : seed_(seed), engine_(splitmix64(seed)) {}

    // uniform real in [lo, hi); lo == hi returns lo
    double uniform(double lo, double hi) {
        if (lo == hi) return lo;
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    // uniform integer in [lo, hi], both ends inclusive
    long long uniform_int(long long lo, long long hi) {
        return std::uniform_int_distribution<long long>(lo, hi)(engine_);
    }

    long long poisson(double lambda) {
        return std::poisson_distribution<long long>(lambda)(engine_);
    }

    double normal(double mean, double sd) {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

    // Independent child stream for this seed and id. splitmix64 mixing keeps
    // ids with small Hamming distance decorrelated.
    RngStream derive(std::uint64_t id) const {
        return RngStream(splitmix64(seed_ ^ splitmix64(id + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace poissonopt
