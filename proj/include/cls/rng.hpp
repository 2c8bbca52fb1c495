#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace cls {

/// SplitMix64 step: advances `state` and returns the next mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Folds a sequence of integer keys into a seed. Distinct key tuples give
/// statistically independent streams; the mapping is stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// xoshiro256++ generator with portable uniform and normal variates.
///
/// Every random quantity in the library is drawn through this type so that
/// a (seed, key tuple) pair fixes results bit-exactly regardless of the
/// standard library implementation. It satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    /// Independent substream keyed by `keys` under `seed`.
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal (Marsaglia polar method, spare value cached).
    double normal();
    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t index(std::uint64_t n);

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cls
