#include <doctest.h>

#include <cmath>
#include <numbers>

#include "defreg/errors.hpp"
#include "defreg/strain.hpp"

using namespace defreg;

namespace {

DisplacementField field_from(int w, int h, auto&& f, double hx = 1.0, double hy = 1.0) {
    DisplacementField d(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 u = f(x * hx, y * hy);
            d.u[d.index(x, y)] = u.x;
            d.v[d.index(x, y)] = u.y;
        }
    }
    return d;
}

double max_abs(const StrainField& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.valid[i]) {
            m = std::max({m, std::abs(s.exx[i]), std::abs(s.eyy[i]), std::abs(s.exy[i])});
        }
    }
    return m;
}

}  // namespace

TEST_CASE("zero field has zero strain") {
    const auto s = green_lagrange_strain(DisplacementField(10, 7));
    CHECK(max_abs(s) == 0.0);
}

TEST_CASE("uniform stretch u = 0.1 x") {
    const auto s = green_lagrange_strain(field_from(12, 9, [](double x, double) {
        return Vec2{0.1 * x, 0.0};
    }));
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.valid[i]);
        CHECK(std::abs(s.exx[i] - 0.105) < 1e-12);
        CHECK(std::abs(s.eyy[i]) < 1e-12);
        CHECK(std::abs(s.exy[i]) < 1e-12);
    }
}

TEST_CASE("rigid motion has no strain") {
    for (const double deg : {5.0, 17.0, 30.0}) {
        const double th = deg * std::numbers::pi / 180.0;
        const auto s = green_lagrange_strain(field_from(20, 15, [&](double x, double y) {
            return Vec2{(std::cos(th) - 1) * x - std::sin(th) * y + 3.7,
                        std::sin(th) * x + (std::cos(th) - 1) * y - 12.1};
        }));
        CHECK(max_abs(s) < 1e-9);
    }
}

TEST_CASE("affine fields give the closed-form constant strain") {
    const double a = 0.03, b = -0.02, c = 0.05, d = 0.01;
    const auto s = green_lagrange_strain(field_from(15, 11, [&](double x, double y) {
        return Vec2{a * x + b * y + 1.0, c * x + d * y - 2.0};
    }));
    const StrainTensor e = green_lagrange({a, b, c, d});
    // Independent oracle: E = (F^T F - I) / 2 with F = I + grad u.
    const double fxx = 1 + a, fxy = b, fyx = c, fyy = 1 + d;
    CHECK(e.exx == doctest::Approx(0.5 * (fxx * fxx + fyx * fyx - 1)).epsilon(1e-14));
    CHECK(e.eyy == doctest::Approx(0.5 * (fxy * fxy + fyy * fyy - 1)).epsilon(1e-14));
    CHECK(e.exy == doctest::Approx(0.5 * (fxx * fxy + fyx * fyy)).epsilon(1e-14));
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s.exx[i] - e.exx) < 1e-10);
        CHECK(std::abs(s.eyy[i] - e.eyy) < 1e-10);
        CHECK(std::abs(s.exy[i] - e.exy) < 1e-10);
    }
}

TEST_CASE("small strains agree with the infinitesimal strain") {
    const auto s = green_lagrange_strain(field_from(30, 20, [](double x, double y) {
        return Vec2{1e-3 * std::sin(x / 5.0) * 5.0, 2e-4 * y};
    }));
    const auto u = field_from(30, 20, [](double x, double y) {
        return Vec2{1e-3 * std::sin(x / 5.0) * 5.0, 2e-4 * y};
    });
    for (int y = 1; y < 19; ++y) {
        for (int x = 1; x < 29; ++x) {
            const double dudx = (u.u[u.index(x + 1, y)] - u.u[u.index(x - 1, y)]) / 2.0;
            CHECK(std::abs(s.exx[s.index(x, y)] - dudx) < 1e-6);
        }
    }
}

TEST_CASE("second-order convergence on a sinusoid") {
    const double amp = 0.5;
    const double lambda = 40.0;
    const double k = 2 * std::numbers::pi / lambda;
    auto max_error = [&](double h) {
        const int n = static_cast<int>(std::lround(80.0 / h)) + 1;
        const auto s = green_lagrange_strain(
            field_from(n, 5, [&](double x, double) { return Vec2{amp * std::sin(k * x), 0.0}; }, h,
                       h),
            {h, h});
        double worst = 0.0;
        for (int x = 0; x < n; ++x) {
            const double g = amp * k * std::cos(k * x * h);
            worst = std::max(worst, std::abs(s.exx[s.index(x, 2)] - (g + 0.5 * g * g)));
        }
        return worst;
    };
    CHECK(max_error(1.0) / max_error(0.5) >= 3.5);
}

TEST_CASE("pixel spacing scales the gradients") {
    const auto u = field_from(8, 8, [](double x, double) { return Vec2{0.2 * x, 0.0}; });
    const auto s = green_lagrange_strain(u, {2.0, 2.0});
    CHECK(s.exx[s.index(4, 4)] == doctest::Approx(0.5 * (0.2 + 0.01)));
}

TEST_CASE("invalid pixels trigger one-sided stencils or invalidity") {
    auto u = field_from(9, 9, [](double x, double y) { return Vec2{0.1 * x, 0.05 * y}; });
    u.valid[u.index(4, 4)] = 0;
    const auto s = green_lagrange_strain(u);
    CHECK_FALSE(s.valid[s.index(4, 4)]);
    // Neighbours of the hole fall back to one-sided differences and stay exact.
    CHECK(s.valid[s.index(3, 4)]);
    CHECK(std::abs(s.exx[s.index(3, 4)] - 0.105) < 1e-12);
    CHECK(std::abs(s.eyy[s.index(4, 3)] - 0.5 * (0.1 + 0.0025)) < 1e-12);

    // An isolated valid column cannot be differentiated along x.
    DisplacementField lonely(5, 5);
    std::fill(lonely.valid.begin(), lonely.valid.end(), 0);
    for (int y = 0; y < 5; ++y) {
        lonely.valid[lonely.index(2, y)] = 1;
    }
    const auto t = green_lagrange_strain(lonely);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK_FALSE(t.valid[i]);
    }
}

TEST_CASE("fields smaller than 3x3 are rejected") {
    CHECK_THROWS_AS(green_lagrange_strain(DisplacementField(2, 10)), ParameterError);
    CHECK_THROWS_AS(green_lagrange_strain(DisplacementField(5, 5), {0.0, 1.0}), ParameterError);
}
