#pragma once

#include "defreg/fields.hpp"
#include "defreg/geometry.hpp"

namespace defreg {

struct DisplacementGradient {
    double du_dx = 0.0;
    double du_dy = 0.0;
    double dv_dx = 0.0;
    double dv_dy = 0.0;
};

struct StrainTensor {
    double exx = 0.0;
    double eyy = 0.0;
    double exy = 0.0;
};

// E = (F^T F - I) / 2 written out per component, F = I + grad u.
constexpr StrainTensor green_lagrange(const DisplacementGradient& g) {
    return {0.5 * (2.0 * g.du_dx + g.du_dx * g.du_dx + g.dv_dx * g.dv_dx),
            0.5 * (2.0 * g.dv_dy + g.du_dy * g.du_dy + g.dv_dy * g.dv_dy),
            0.5 * (g.du_dy + g.dv_dx + g.du_dx * g.du_dy + g.dv_dx * g.dv_dy)};
}

// Finite-difference Green-Lagrange strain of a total (Lagrangian) displacement
// field. Central differences inside, second-order one-sided differences where
// a central stencil would leave the grid or touch an invalid pixel.
// Throws ParameterError for fields smaller than 3x3.
StrainField green_lagrange_strain(const DisplacementField& field, Vec2 pixel_spacing = {1.0, 1.0});

}  // namespace defreg
