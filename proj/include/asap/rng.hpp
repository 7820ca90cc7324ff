#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace asap {

/// SplitMix64 step; used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seeded generator: std::mt19937_64 (bit-exact across standard libraries)
/// with hand-written conversions so every draw is platform independent.
/// std distributions are avoided on purpose: their algorithms are unspecified.
class rng
{
public:
    explicit rng(std::uint64_t seed) : engine_(seed) {}

    /// Generator for substream `stream` of `seed`.
    static rng split(std::uint64_t seed, std::uint64_t stream) noexcept
    {
        std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        return rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Unit-mean exponential variate.
    double exponential() { return -std::log1p(-uniform()); }

    /// Uniform integer in [0, bound) by multiply-shift on 32 bits.
    static std::uint32_t bounded(std::uint32_t bits, std::uint32_t bound) noexcept
    {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(bits) * bound) >> 32);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace asap
