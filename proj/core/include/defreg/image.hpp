#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "defreg/geometry.hpp"

namespace defreg {

enum class Interpolation { bilinear, cubic_bspline };

namespace detail {
struct SplineCache;
}

// Immutable 2-D intensity grid, values in [0, 1], with an optional ROI mask
// (nonzero = inside). Continuous coordinates put pixel (i, j) at (i, j);
// the interpolation domain is the pixel area [-0.5, w-0.5] x [-0.5, h-0.5].
class GrayImage {
public:
    GrayImage(int width, int height, std::vector<double> intensities,
              std::vector<std::uint8_t> mask = {});

    static GrayImage constant(int width, int height, double value);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double at(int x, int y) const { return data_[index(x, y)]; }
    std::span<const double> intensities() const { return data_; }

    bool has_mask() const { return !mask_.empty(); }
    // Empty span when there is no mask.
    std::span<const std::uint8_t> mask() const { return mask_; }
    bool in_roi(int x, int y) const { return mask_.empty() || mask_[index(x, y)] != 0; }

    GrayImage with_mask(std::vector<std::uint8_t> mask) const;
    GrayImage without_mask() const;

    bool contains(Vec2 p) const {
        return p.x >= -0.5 && p.x <= width_ - 0.5 && p.y >= -0.5 && p.y <= height_ - 0.5;
    }

    // Prefiltered cubic B-spline coefficients, computed on first use.
    std::span<const double> spline_coefficients() const;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

private:
    int width_;
    int height_;
    std::vector<double> data_;
    std::vector<std::uint8_t> mask_;
    std::shared_ptr<detail::SplineCache> cache_;
};

struct ValueAndGradient {
    double value = 0.0;
    Vec2 gradient;
};

// Throws OutOfBoundsError when p lies outside the image domain.
double interpolate(const GrayImage& image, Vec2 p, Interpolation scheme);

// Derivative of the cubic B-spline interpolant.
Vec2 intensity_gradient(const GrayImage& image, Vec2 p);

// Cubic value and gradient in one pass (metric inner loop).
ValueAndGradient sample_cubic(const GrayImage& image, Vec2 p);

// Separable Gaussian with mirror boundaries, kernel truncated at 4 sigma.
GrayImage gaussian_smooth(const GrayImage& image, double sigma);

// Level 0 is the identity. Level k smooths with sigma = 2^(k-1) and keeps
// every 2^k-th pixel, so coarse (i, j) sits at fine (i * 2^k, j * 2^k).
GrayImage pyramid_level(const GrayImage& image, int level);

// Cubic B-spline basis weights for fractional offset u in [0, 1), applied to
// samples floor-1 .. floor+2.
struct CubicWeights {
    double w[4];
};
CubicWeights cubic_bspline_weights(double u);
CubicWeights cubic_bspline_derivative_weights(double u);

// Centered cubic B-spline and its derivative.
double bspline3(double t);
double bspline3_derivative(double t);

// In-place interpolation prefilter of one line (pole sqrt(3) - 2, mirror
// boundary).
void prefilter_cubic_line(std::span<double> line);

}  // namespace defreg
