#include "defreg/bspline_transform.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "defreg/errors.hpp"
#include "defreg/image.hpp"
#include "defreg/text_format.hpp"

namespace defreg {

BSplineTransform::BSplineTransform(int domain_width, int domain_height, Vec2 origin,
                                   Vec2 spacing, int nx, int ny,
                                   std::vector<double> coefficients)
    : domain_width_(domain_width),
      domain_height_(domain_height),
      origin_(origin),
      spacing_(spacing),
      nx_(nx),
      ny_(ny),
      coefficients_(std::move(coefficients)) {
    if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !std::isfinite(spacing.x) ||
        !std::isfinite(spacing.y)) {
        throw ParameterError("control-point spacing must be positive");
    }
    if (nx < 4 || ny < 4) {
        throw ParameterError("control grid needs at least 4x4 points");
    }
    if (coefficients_.size() != parameter_count()) {
        throw ParameterError("coefficient count " + std::to_string(coefficients_.size()) +
                             " does not match grid " + std::to_string(nx) + "x" +
                             std::to_string(ny));
    }
    for (double c : coefficients_) {
        if (!std::isfinite(c)) {
            throw ParameterError("non-finite transform coefficient");
        }
    }
}

void BSplineTransform::set_coefficients(std::span<const double> values) {
    if (values.size() != coefficients_.size()) {
        throw ParameterError("coefficient vector has the wrong length");
    }
    std::copy(values.begin(), values.end(), coefficients_.begin());
}

Vec2 BSplineTransform::coefficient(int i, int j) const {
    const std::size_t k = static_cast<std::size_t>(j) * nx_ + i;
    return {coefficients_[k], coefficients_[k + control_point_count()]};
}

void BSplineTransform::set_coefficient(int i, int j, Vec2 value) {
    const std::size_t k = static_cast<std::size_t>(j) * nx_ + i;
    coefficients_[k] = value.x;
    coefficients_[k + control_point_count()] = value.y;
}

bool BSplineTransform::covers(Vec2 p) const {
    const double tx = (p.x - origin_.x) / spacing_.x;
    const double ty = (p.y - origin_.y) / spacing_.y;
    return tx >= 1.0 && tx < nx_ - 2.0 && ty >= 1.0 && ty < ny_ - 2.0;
}

SupportWeights BSplineTransform::support(Vec2 p) const {
    if (!covers(p)) {
        throw OutOfBoundsError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                               ") outside the control grid");
    }
    const double tx = (p.x - origin_.x) / spacing_.x;
    const double ty = (p.y - origin_.y) / spacing_.y;
    const double fx = std::floor(tx);
    const double fy = std::floor(ty);
    const int i0 = static_cast<int>(fx) - 1;
    const int j0 = static_cast<int>(fy) - 1;
    const CubicWeights wx = cubic_bspline_weights(tx - fx);
    const CubicWeights wy = cubic_bspline_weights(ty - fy);

    SupportWeights s;
    std::size_t k = 0;
    for (int b = 0; b < 4; ++b) {
        const std::size_t row = static_cast<std::size_t>(j0 + b) * nx_;
        for (int a = 0; a < 4; ++a, ++k) {
            s.index[k] = row + static_cast<std::size_t>(i0 + a);
            s.weight[k] = wx.w[a] * wy.w[b];
        }
    }
    return s;
}

Vec2 BSplineTransform::weighted_displacement(const SupportWeights& s) const {
    const std::size_t n = control_point_count();
    Vec2 d;
    for (std::size_t k = 0; k < 16; ++k) {
        d.x += s.weight[k] * coefficients_[s.index[k]];
        d.y += s.weight[k] * coefficients_[s.index[k] + n];
    }
    return d;
}

Vec2 BSplineTransform::displacement(Vec2 p) const { return weighted_displacement(support(p)); }

BSplineTransform new_transform(int width, int height, Vec2 spacing) {
    if (!(spacing.x > 0.0) || !(spacing.y > 0.0)) {
        throw ParameterError("control-point spacing must be positive, got (" +
                             std::to_string(spacing.x) + ", " + std::to_string(spacing.y) + ")");
    }
    if (width < 8 || height < 8) {
        throw ParameterError("transform domain must be at least 8x8");
    }
    // m intervals cover the domain extent; the grid is centred on the domain
    // and padded by two intervals low and three high, so every domain point
    // has t in [2, m + 2] and its support never touches the outermost nodes.
    auto axis = [](int extent, double delta, double& origin, int& count) {
        const int m = static_cast<int>(std::ceil(extent / delta));
        const double centre = (extent - 1) / 2.0;
        origin = centre - (m / 2.0 + 2.0) * delta;
        count = m + 5;
    };
    Vec2 origin;
    int nx = 0;
    int ny = 0;
    axis(width, spacing.x, origin.x, nx);
    axis(height, spacing.y, origin.y, ny);
    return BSplineTransform(width, height, origin, spacing, nx, ny,
                            std::vector<double>(2 * static_cast<std::size_t>(nx) * ny, 0.0));
}

namespace {

// Least-squares inverse (n x m, row-major) of the m x n collocation matrix
// of one grid axis at pixel centres 0..m-1. Nodes without pixel support
// get zero rows through a tiny ridge term.
std::vector<double> axis_pseudo_inverse(int pixels, double origin, double spacing, int nodes) {
    const auto m = static_cast<std::size_t>(pixels);
    const auto n = static_cast<std::size_t>(nodes);
    std::vector<double> b(m * n, 0.0);
    for (std::size_t x = 0; x < m; ++x) {
        const double t = (static_cast<double>(x) - origin) / spacing;
        const double f = std::floor(t);
        const CubicWeights w = cubic_bspline_weights(t - f);
        for (int a = 0; a < 4; ++a) {
            const int node = static_cast<int>(f) - 1 + a;
            b[x * n + static_cast<std::size_t>(node)] = w.w[a];
        }
    }
    // Normal matrix, then Cholesky.
    std::vector<double> g(n * n, 0.0);
    for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t i = 0; i < n; ++i) {
            const double bi = b[x * n + i];
            if (bi == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] += bi * b[x * n + j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        g[i * n + i] += 1e-12;
    }
    for (std::size_t j = 0; j < n; ++j) {
        double d = g[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= g[j * n + k] * g[j * n + k];
        }
        g[j * n + j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = g[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                v -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = v / g[j * n + j];
        }
    }
    // Solve L L^T p = b^T column by column.
    std::vector<double> p(n * m, 0.0);
    std::vector<double> col(n);
    for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = b[x * n + i];
            for (std::size_t k = 0; k < i; ++k) {
                v -= g[i * n + k] * col[k];
            }
            col[i] = v / g[i * n + i];
        }
        for (std::size_t i = n; i-- > 0;) {
            double v = col[i];
            for (std::size_t k = i + 1; k < n; ++k) {
                v -= g[k * n + i] * col[k];
            }
            col[i] = v / g[i * n + i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            p[i * m + x] = col[i];
        }
    }
    return p;
}

}  // namespace

BSplineTransform refit_transform(const BSplineTransform& source, Vec2 spacing) {
    BSplineTransform target = new_transform(source.domain_width(), source.domain_height(), spacing);
    const auto w = static_cast<std::size_t>(source.domain_width());
    const auto h = static_cast<std::size_t>(source.domain_height());
    const auto nx = static_cast<std::size_t>(target.nx());
    const auto ny = static_cast<std::size_t>(target.ny());
    const auto px = axis_pseudo_inverse(source.domain_width(), target.origin().x, spacing.x,
                                        target.nx());
    const auto py = axis_pseudo_inverse(source.domain_height(), target.origin().y, spacing.y,
                                        target.ny());
    const std::size_t n = target.control_point_count();
    auto coeffs = target.coefficients();
    for (int comp = 0; comp < 2; ++comp) {
        // rows[y][i] = sum_x U[y][x] px[i][x]
        std::vector<double> rows(h * nx, 0.0);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const Vec2 d =
                    source.displacement({static_cast<double>(x), static_cast<double>(y)});
                const double u = comp == 0 ? d.x : d.y;
                for (std::size_t i = 0; i < nx; ++i) {
                    rows[y * nx + i] += u * px[i * w + x];
                }
            }
        }
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                double c = 0.0;
                for (std::size_t y = 0; y < h; ++y) {
                    c += py[j * h + y] * rows[y * nx + i];
                }
                coeffs[comp * n + j * nx + i] = c;
            }
        }
    }
    return target;
}

void write_transform(std::ostream& out, const BSplineTransform& t) {
    out << "defreg-bspline-transform 1\n";
    out << "domain " << t.domain_width() << ' ' << t.domain_height() << '\n';
    out << "origin " << format_double(t.origin().x) << ' ' << format_double(t.origin().y) << '\n';
    out << "spacing " << format_double(t.spacing().x) << ' ' << format_double(t.spacing().y)
        << '\n';
    out << "dims " << t.nx() << ' ' << t.ny() << '\n';
    out << "coefficients\n";
    for (int j = 0; j < t.ny(); ++j) {
        for (int i = 0; i < t.nx(); ++i) {
            const Vec2 c = t.coefficient(i, j);
            out << format_double(c.x) << ' ' << format_double(c.y) << '\n';
        }
    }
}

BSplineTransform read_transform(std::istream& in) {
    auto expect = [&](const std::string& key) {
        std::string word;
        if (!(in >> word) || word != key) {
            throw FormatError("transform: expected '" + key + "'");
        }
    };
    auto number = [&](const char* what) {
        std::string token;
        if (!(in >> token)) {
            throw FormatError(std::string("transform: missing ") + what);
        }
        return parse_double(token, what);
    };
    expect("defreg-bspline-transform");
    if (number("version") != 1.0) {
        throw FormatError("transform: unsupported version");
    }
    expect("domain");
    const int w = static_cast<int>(number("domain width"));
    const int h = static_cast<int>(number("domain height"));
    expect("origin");
    Vec2 origin{number("origin x"), 0.0};
    origin.y = number("origin y");
    expect("spacing");
    Vec2 spacing{number("spacing x"), 0.0};
    spacing.y = number("spacing y");
    expect("dims");
    const int nx = static_cast<int>(number("nx"));
    const int ny = static_cast<int>(number("ny"));
    expect("coefficients");
    if (nx < 4 || ny < 4 || nx > 100000 || ny > 100000) {
        throw FormatError("transform: bad grid dimensions");
    }
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    std::vector<double> coeffs(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        coeffs[k] = number("coefficient");
        coeffs[k + n] = number("coefficient");
    }
    return BSplineTransform(w, h, origin, spacing, nx, ny, std::move(coeffs));
}

}  // namespace defreg
