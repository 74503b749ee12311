#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace ercav {

/// Philox4x32-10 block function (Salmon et al., SC'11).
[[nodiscard]] std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                                         std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used to derive independent keys from (seed, tag, index).
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                                  std::uint64_t index) noexcept {
    return mix64(mix64(seed ^ mix64(tag)) + index);
}

/// Stream ids partition the counter space so that different consumers of one
/// master seed never share random numbers.
enum class Stream : std::uint32_t {
    trial = 1,
    particle = 2,
    bootstrap = 3,
    diffusion = 4,
    duty = 5,
    test = 0xFFFF,
};

/**
 * Counter-based generator: the state is (key, stream, index, block), so the
 * numbers for trial i depend only on (seed, i) and never on scheduling.
 * Satisfies UniformRandomBitGenerator.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    Rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(static_cast<std::uint32_t>(stream)),
          index_(index) {}

    explicit Rng(std::uint64_t seed) noexcept : Rng(seed, Stream::test, 0) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 2) refill();
        const auto i = 2 * pos_++;
        return (static_cast<std::uint64_t>(buf_[i]) << 32) | buf_[i + 1];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() noexcept { return 1.0 - uniform(); }

    /// Jump to an absolute block of this (seed, stream, index) sequence.
    void seek(std::uint32_t block) noexcept {
        block_ = block;
        pos_ = 2;
        has_spare_ = false;
    }

    double normal() noexcept;
    double exponential(double rate) noexcept { return -std::log(uniform_pos()) / rate; }
    std::uint64_t poisson(double mean);
    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_;
    std::uint64_t index_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 2;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ercav
