#pragma once

#include <cstdint>

namespace gencodec {

// Counter-based deterministic generator built on splitmix64. Every stream is
// fully determined by (seed, stream); no global state, so results do not
// depend on call order elsewhere in the process or on thread scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    // Inclusive on both ends.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Standard normal via Box-Muller; generates pairs, caches the spare.
    double normal();

    // Derives an independent seed from two values (for per-image or
    // per-stream substreams).
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

} // namespace gencodec
