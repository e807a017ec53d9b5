#pragma once

#include <cmath>

namespace defreg {

// Continuous position or displacement in pixel units; x rightward, y downward.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

struct PixelCoord {
    int x = 0;
    int y = 0;
};

// Row-major 2x2 matrix [[xx, xy], [yx, yy]].
struct Mat2 {
    double xx = 1.0;
    double xy = 0.0;
    double yx = 0.0;
    double yy = 1.0;

    constexpr Vec2 apply(Vec2 v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }
    constexpr double det() const { return xx * yy - xy * yx; }
};

}  // namespace defreg
