#include "defreg/rng.hpp"

#include <cmath>
#include <numbers>

namespace defreg {

double Rng::normal() {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double hashed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const std::uint64_t k = mix_seed(seed, a, b, c);
    const double u1 = 1.0 - bits_to_unit(splitmix64(k));
    const double u2 = bits_to_unit(splitmix64(k ^ 0xa5a5a5a5a5a5a5a5ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace defreg
