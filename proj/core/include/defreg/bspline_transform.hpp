#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "defreg/geometry.hpp"

namespace defreg {

// The 16 control points supporting one location, with tensor-product cubic
// B-spline weights. A weight applies to both displacement components:
// component x of point k is parameter index[k], component y is
// index[k] + control_point_count().
struct SupportWeights {
    std::array<std::size_t, 16> index{};
    std::array<double, 16> weight{};
};

// Cubic B-spline free-form deformation T(x) = x + sum_k c_k B((x - x_k) / spacing).
// Coefficients are displacements in pixels; all x components are stored
// first, then all y components, control point (i, j) at j * nx + i.
class BSplineTransform {
public:
    BSplineTransform(int domain_width, int domain_height, Vec2 origin, Vec2 spacing, int nx,
                     int ny, std::vector<double> coefficients);

    int domain_width() const { return domain_width_; }
    int domain_height() const { return domain_height_; }
    Vec2 origin() const { return origin_; }
    Vec2 spacing() const { return spacing_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t control_point_count() const { return static_cast<std::size_t>(nx_) * ny_; }
    std::size_t parameter_count() const { return 2 * control_point_count(); }

    std::span<const double> coefficients() const { return coefficients_; }
    std::span<double> coefficients() { return coefficients_; }
    void set_coefficients(std::span<const double> values);

    Vec2 control_point_position(int i, int j) const {
        return {origin_.x + i * spacing_.x, origin_.y + j * spacing_.y};
    }
    Vec2 coefficient(int i, int j) const;
    void set_coefficient(int i, int j, Vec2 value);

    // True when the full 4x4 support of p lies inside the grid.
    bool covers(Vec2 p) const;
    // The registered image domain [-0.5, w-0.5] x [-0.5, h-0.5].
    bool domain_contains(Vec2 p) const {
        return p.x >= -0.5 && p.x <= domain_width_ - 0.5 && p.y >= -0.5 &&
               p.y <= domain_height_ - 0.5;
    }

    // Throw OutOfBoundsError when !covers(p).
    SupportWeights support(Vec2 p) const;
    Vec2 displacement(Vec2 p) const;
    Vec2 transform_point(Vec2 p) const { return p + displacement(p); }

    // Displacement using precomputed support (no bounds check).
    Vec2 weighted_displacement(const SupportWeights& s) const;

private:
    int domain_width_;
    int domain_height_;
    Vec2 origin_;
    Vec2 spacing_;
    int nx_;
    int ny_;
    std::vector<double> coefficients_;
};

// Identity transform whose grid covers the (width x height) image domain
// plus one spare control point beyond the minimum support on each side.
BSplineTransform new_transform(int width, int height, Vec2 spacing);

// Transform on a new grid (see new_transform) whose displacement is the
// least-squares fit to `source` over the pixel centres of its domain. Exact
// whenever the source field lies in the new spline space.
BSplineTransform refit_transform(const BSplineTransform& source, Vec2 spacing);

inline Vec2 transform_point(const BSplineTransform& t, Vec2 p) { return t.transform_point(p); }
inline SupportWeights parameter_jacobian(const BSplineTransform& t, Vec2 p) {
    return t.support(p);
}

// Plain-text serialization; doubles use shortest round-trip form.
void write_transform(std::ostream& out, const BSplineTransform& t);
BSplineTransform read_transform(std::istream& in);

}  // namespace defreg
