#pragma once

// Shared fixtures for the unit tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include "defreg/image.hpp"
#include "defreg/rng.hpp"
#include "defreg/synthetic.hpp"

namespace defreg::test {

inline SpecklePattern speckle_pattern(int w, int h, std::uint64_t seed = 1) {
    SpeckleParams p;
    p.seed = seed;
    return SpecklePattern(w, h, p);
}

inline GrayImage speckle(int w, int h, std::uint64_t seed = 1) {
    return speckle_pattern(w, h, seed).render(w, h);
}

inline GrayImage white_noise(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (double& x : v) {
        x = rng.uniform();
    }
    return GrayImage(w, h, std::move(v));
}

inline GrayImage from_function(int w, int h, auto&& f) {
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            v[static_cast<std::size_t>(y) * w + x] = f(x, y);
        }
    }
    return GrayImage(w, h, std::move(v));
}

inline double variance(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += (x - mean) * (x - mean);
    }
    return s / static_cast<double>(v.size());
}

}  // namespace defreg::test
