#pragma once

#include <cstdint>
#include <random>

namespace polarforge {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of substream `stream` under `seed`; `tag` separates independent uses of one trial index.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag = 0) {
    return mix64(mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL)) + stream);
}

/// Wraps mt19937_64 with distribution code that is identical on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

    std::uint64_t next() { return eng_(); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    std::uint8_t bit() {
        if (nbits_ == 0) {
            cache_ = eng_();
            nbits_ = 64;
        }
        std::uint8_t b = cache_ & 1u;
        cache_ >>= 1;
        --nbits_;
        return b;
    }

    std::uint8_t bernoulli(double p) { return uniform() < p ? 1 : 0; }

    /// Uniform on [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection keeps the result exactly uniform
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do v = eng_();
        while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 eng_;
    std::uint64_t cache_ = 0;
    int nbits_ = 0;
};

}  // namespace polarforge
