#pragma once

// Counter-based random streams. Every consumer derives its own stream from
// (seed, domain, counter), so results never depend on scheduling order.

#include <cstdint>

namespace qsdc {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream domains; distinct values keep per-purpose streams independent.
enum class StreamDomain : std::uint64_t {
    round = 0x726f756e64ULL,
    security_subset = 0x7365637572ULL,
    auxiliary = 0x61757869ULL,
};

/// SplitMix64 sequence keyed by (seed, domain, counter).
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t key) noexcept : state_(key) {}

    static RandomStream derive(std::uint64_t seed, StreamDomain domain, std::uint64_t counter) noexcept {
        return RandomStream(mix64(mix64(seed ^ static_cast<std::uint64_t>(domain)) + mix64(counter + kGamma)));
    }

    std::uint64_t next() noexcept {
        state_ += kGamma;
        return mix64(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return double(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n > 0 (multiply-high; bias below n / 2^64).
    std::uint64_t below(std::uint64_t n) noexcept {
        return std::uint64_t((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t state_;
};

}  // namespace qsdc
