#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gradnoise {

/// SplitMix64 finalizer. Used to expand seeds and to derive independent
/// stream keys from (seed, stream) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derive a child seed. Distinct (seed, stream) pairs give statistically
/// independent generators, so per-direction / per-minibatch work can be
/// seeded without sharing state.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed + 0x9E3779B97F4A7C15ull * (mix64(stream) | 1ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t substream) noexcept {
    return derive_seed(derive_seed(seed, stream), substream);
}

/// Stream tags for the independent random streams used across the library.
namespace streams {
inline constexpr std::uint64_t directions = 0x6469'7273ull;
inline constexpr std::uint64_t baseline = 0x6261'7365ull;
inline constexpr std::uint64_t stable = 0x7374'6162ull;
inline constexpr std::uint64_t init = 0x696e'6974ull;
inline constexpr std::uint64_t train_batch = 0x7472'6169ull;
inline constexpr std::uint64_t probe_batch = 0x7072'6f62ull;
inline constexpr std::uint64_t blobs = 0x626c'6f62ull;
}  // namespace streams

/// xoshiro256** seeded through SplitMix64. Satisfies
/// UniformRandomBitGenerator, but the library only uses the member
/// transforms below so that output does not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s += 0x9E3779B97F4A7C15ull;
            word = mix64(s);
        }
    }

    Rng(std::uint64_t seed, std::uint64_t stream) noexcept : Rng(derive_seed(seed, stream)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = std::rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on (lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform_open(); }

    /// Unbiased integer in [0, n), Lemire's multiply-and-reject.
    std::uint64_t below(std::uint64_t n) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
        const double angle = 2.0 * std::numbers::pi * uniform_open();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Unit-rate exponential.
    double exponential() noexcept { return -std::log(uniform_open()); }

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gradnoise
