#pragma once

#include <cstdint>
#include <span>

namespace ebla {

/// Counter-based generator: output k of stream (seed, stream) is a pure function
/// of (seed, stream, k), so work split across threads reproduces serial results.
/// Mixing is SplitMix64.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Index drawn from nonnegative weights (inverse CDF).
    std::size_t discrete(std::span<const double> weights);

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ebla
