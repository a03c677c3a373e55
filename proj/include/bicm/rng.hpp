#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace bicm {

/// SplitMix64 finalizer. Used only to derive independent engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Sub-stream tags. Each simulated frame draws every random quantity from its
/// own tagged stream, so changing e.g. the pilot count never shifts the noise
/// samples seen by the data symbols.
enum class StreamTag : std::uint64_t {
    fade = 1,
    pilot_noise = 2,
    payload = 3,
    data_noise = 4,
    interleaver = 5,
    estimate = 6,
    posterior = 7,
};

/// Seed splitting rule: seed = mix(mix(mix(run_seed) ^ index) ^ tag).
constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t index,
                                    StreamTag tag) noexcept {
    return splitmix64(splitmix64(splitmix64(run_seed) ^ index) ^ static_cast<std::uint64_t>(tag));
}

/// A deterministic random stream (mt19937_64 seeded through derive_seed).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}
    RngStream(std::uint64_t run_seed, std::uint64_t index, StreamTag tag)
        : engine_(derive_seed(run_seed, index, tag)) {}

    std::uint64_t next_u64() { return engine_(); }

    int bit() { return static_cast<int>(engine_() >> 63); }

    /// Uniform integer in [0, bound): rejection of the top partial block, then modulo.
    std::uint64_t below(std::uint64_t bound);

    double normal() { return normal_(engine_); }

    /// Circularly symmetric CN(0, variance).
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {s * re, s * im};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bicm
