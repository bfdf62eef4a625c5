#pragma once

#include <cstdint>
#include <random>

namespace spinglass {

/// Deterministic random source addressed by (seed, stream id).
///
/// Identical (seed, stream) pairs replay identical sequences within one build.
/// Gaussian variates come from std::normal_distribution over mt19937_64
/// (Marsaglia polar method in libstdc++); cross-build bit equality is not
/// promised. A stream must not be shared between concurrent tasks: split it
/// with substream() instead.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Independent child stream; the same (parent, index) always yields the same child.
    RandomStream substream(std::uint64_t index) const;

    double gaussian();
    double uniform();  // [0, 1)
    std::uint64_t bits();
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    int spin() { return (bits() & 1u) ? 1 : -1; }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// SplitMix64 finalizer, used to derive stream identifiers and hashes.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace spinglass
