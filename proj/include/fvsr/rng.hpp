#pragma once

// Counter-based random streams.
//
// A Stream is a pure function of (key, counter): the i-th draw is
// fmix64(key + i * kGamma), with the key itself derived by hashing a seed
// path such as (experiment seed, trial, substream). Draws do not depend on
// thread scheduling or on how many other streams exist, so serial and
// parallel runs produce bit-identical data.
//
// Distributions are implemented here rather than taken from <random>,
// whose distribution algorithms are implementation-defined:
//   uniform01  - 53 random bits mapped to (0, 1]
//   below(n)   - rejection sampling on the top of the 64-bit range
//   gaussian   - Box-Muller, cosine branch only (two uniforms per normal)

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace fvsr::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t fmix64(std::uint64_t v) noexcept {
    v ^= v >> 30;
    v *= 0xBF58476D1CE4E5B9ULL;
    v ^= v >> 27;
    v *= 0x94D049BB133111EBULL;
    v ^= v >> 31;
    return v;
}

// Hash a seed and a path of integers into a stream key.
constexpr std::uint64_t derive_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = fmix64(seed + kGamma);
    for (std::uint64_t p : path) key = fmix64(key ^ fmix64(p + 0x632BE59BD9B4E019ULL));
    return key;
}

// Named substreams; values are part of the reproducibility contract.
enum class Substream : std::uint64_t {
    matrix = 1,
    signal = 2,
    noise = 3,
    reshuffle = 4,
    sensors = 5,
    targets = 6,
    dictionary_noise = 7,
    measurement_noise = 8,
};

class Stream {
public:
    explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

    static constexpr Stream from_seed(std::uint64_t seed) noexcept {
        return Stream(derive_key(seed, {}));
    }

    static constexpr Stream for_trial(std::uint64_t seed, std::uint64_t trial,
                                      Substream sub) noexcept {
        return Stream(derive_key(seed, {trial, static_cast<std::uint64_t>(sub)}));
    }

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return fmix64(key_ + counter_ * kGamma);
    }

    // Uniform on (0, 1].
    constexpr double uniform01() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n); n must be positive.
    constexpr std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    double gaussian() noexcept {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace fvsr::rng
