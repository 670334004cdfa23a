#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace csbm {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-trial seed derivation: mix(seed, index) = splitmix64(seed ^ splitmix64(index)).
/// Trials are addressed by index, never by draw order, so any subset of trials
/// can be generated in any order or in parallel with identical results.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ splitmix64(index));
}

/// Purpose tags that separate the independent streams of one trial.
enum class StreamTag : std::uint64_t {
    Graph = 0x6772617068ULL,         // "graph"
    Features = 0x6665617473ULL,      // "feats"
    FeaturesAlt = 0x6665617432ULL,   // second independent feature draw
    Split = 0x73706c6974ULL,         // "split"
    Roots = 0x726f6f7473ULL,         // "roots"
};

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial_index,
                                    StreamTag tag) noexcept {
    return mix_seed(mix_seed(seed, trial_index), static_cast<std::uint64_t>(tag));
}

/// 64-bit Mersenne Twister with helpers that do not depend on the
/// implementation-defined distribution algorithms of the standard library
/// except for the normal draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by Lemire's rejection method.
    std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1)
            return 0;
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold)
                return r % bound;
        }
    }

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    std::mt19937_64 &engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace csbm
