#include "defreg/strain.hpp"

#include <optional>

#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"

namespace defreg {

namespace {

// Derivative along one axis at position i of a line of length n, sampled
// through get(k) and ok(k). Falls back from central to one-sided stencils.
template <typename Get, typename Ok>
std::optional<double> derivative(int i, int n, double h, Get get, Ok ok) {
    if (i - 1 >= 0 && i + 1 < n && ok(i - 1) && ok(i + 1)) {
        return (get(i + 1) - get(i - 1)) / (2.0 * h);
    }
    if (i + 2 < n && ok(i + 1) && ok(i + 2)) {
        return (-3.0 * get(i) + 4.0 * get(i + 1) - get(i + 2)) / (2.0 * h);
    }
    if (i - 2 >= 0 && ok(i - 1) && ok(i - 2)) {
        return (3.0 * get(i) - 4.0 * get(i - 1) + get(i - 2)) / (2.0 * h);
    }
    return std::nullopt;
}

}  // namespace

StrainField green_lagrange_strain(const DisplacementField& f, Vec2 spacing) {
    if (f.width < 3 || f.height < 3) {
        throw ParameterError("strain needs a displacement field of at least 3x3");
    }
    if (!(spacing.x > 0.0) || !(spacing.y > 0.0)) {
        throw ParameterError("pixel spacing must be positive");
    }
    StrainField out(f.width, f.height);
    const std::size_t rows = static_cast<std::size_t>(f.height);
    parallel_for_blocks(rows, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < f.width; ++x) {
            const std::size_t i = f.index(x, y);
            if (!f.valid[i]) {
                out.valid[i] = 0;
                continue;
            }
            auto ok_x = [&](int k) { return f.valid[f.index(k, y)] != 0; };
            auto ok_y = [&](int k) { return f.valid[f.index(x, k)] != 0; };
            const auto du_dx = derivative(x, f.width, spacing.x, [&](int k) { return f.u[f.index(k, y)]; }, ok_x);
            const auto dv_dx = derivative(x, f.width, spacing.x, [&](int k) { return f.v[f.index(k, y)]; }, ok_x);
            const auto du_dy = derivative(y, f.height, spacing.y, [&](int k) { return f.u[f.index(x, k)]; }, ok_y);
            const auto dv_dy = derivative(y, f.height, spacing.y, [&](int k) { return f.v[f.index(x, k)]; }, ok_y);
            if (!du_dx || !dv_dx || !du_dy || !dv_dy) {
                out.valid[i] = 0;
                continue;
            }
            const StrainTensor e = green_lagrange({*du_dx, *du_dy, *dv_dx, *dv_dy});
            out.exx[i] = e.exx;
            out.eyy[i] = e.eyy;
            out.exy[i] = e.exy;
        }
    });
    return out;
}

}  // namespace defreg
