#pragma once

#include <cstdint>
#include <random>

namespace defreg {

// Named substreams; every random draw in the library derives from one
// user seed combined with one of these tags.
enum class Stream : std::uint64_t {
    sampling = 0x53414d50,
    speckle = 0x5350434b,
    noise = 0x4e4f4953,
};

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, Stream s, std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept {
    return mix_seed(seed, static_cast<std::uint64_t>(s), b, c);
}

// Maps 64 random bits to a double in [0, 1).
constexpr double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// mt19937_64 with hand-rolled distributions: the std distributions are
// implementation-defined, which would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return bits_to_unit(engine_()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t r = engine_();
        while (r >= limit) {
            r = engine_();
        }
        return r % n;
    }

    double normal();

private:
    std::mt19937_64 engine_;
};

// Standard normal deviate that depends only on the key, for per-pixel
// noise that is independent of evaluation order.
double hashed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace defreg
