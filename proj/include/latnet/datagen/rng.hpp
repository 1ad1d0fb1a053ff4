#pragma once

#include <cstdint>
#include <random>

namespace latnet::datagen {

/// Portable seeded randomness. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; the mappings to integers and reals
/// below are implemented here rather than with <random> distributions, whose
/// algorithms differ between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [lo, hi] (inclusive), unbiased by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent child seeds from (seed, stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace latnet::datagen
