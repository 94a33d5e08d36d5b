#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rrl {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based generator: the n-th output is a pure function of (key, n).
///
/// Streams are derived with split(), so a generator for (experiment, seed,
/// episode) can be rebuilt anywhere without threading state through callers.
/// Satisfies UniformRandomBitGenerator, but the helpers below are preferred
/// because their results do not depend on the standard library vendor.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(splitmix64(seed)) {}

    static constexpr CounterRng from_keys(std::initializer_list<std::uint64_t> keys) noexcept {
        CounterRng rng;
        for (auto k : keys) rng = rng.split(k);
        return rng;
    }

    [[nodiscard]] constexpr CounterRng split(std::uint64_t stream) const noexcept {
        CounterRng child;
        child.key_ = splitmix64(key_ ^ splitmix64(stream + 0xD1B54A32D192ED03ULL));
        return child;
    }

    constexpr result_type operator()() noexcept {
        return splitmix64(key_ ^ splitmix64(++counter_ * 0x9E3779B97F4A7C15ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n). Rejection keeps it unbiased.
    constexpr std::size_t below(std::size_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace rrl
