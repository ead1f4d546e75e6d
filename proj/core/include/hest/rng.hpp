#pragma once

#include <cstdint>

namespace hest {

/// Deterministic counter-based 64-bit generator. Draw k for seed s is
///
///   mix(s + (k+1) * 0x9E3779B97F4A7C15)
///
/// where mix is the splitmix64 finalizer (xor-shift-multiply chain
/// 30/0xBF58476D1CE4E5B9, 27/0x94D049BB133111EB, 31). Every sample is
/// addressable by (seed, counter) alone, so sequences are reproducible
/// bit-for-bit across platforms and implementations.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
        std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return at(seed_, counter_++); }

    /// Uniform on [0, 1), 53 mantissa bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [-bound, bound).
    double next_symmetric(double bound) { return bound * (2.0 * next_unit() - 1.0); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace hest
