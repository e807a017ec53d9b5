#include "defreg/dic.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"
#include "defreg/strain.hpp"

namespace defreg {

void DicParams::validate() const {
    if (subset_radius < 5) {
        throw ParameterError("dic.subset_radius must be at least 5");
    }
    if (step < 1) {
        throw ParameterError("dic.step must be at least 1");
    }
    if (search_radius < 1) {
        throw ParameterError("dic.search_radius must be at least 1");
    }
    if (!(strain_radius >= 2.0)) {
        throw ParameterError("dic.strain_radius must be at least 2");
    }
    if (!(min_correlation >= -1.0 && min_correlation <= 1.0)) {
        throw ParameterError("dic.min_correlation must lie in [-1, 1]");
    }
}

namespace {

constexpr double kPerfectMatch = 1e-9;

struct Offset {
    int dx;
    int dy;
};

std::vector<Offset> circular_subset(int radius) {
    std::vector<Offset> out;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) {
                out.push_back({dx, dy});
            }
        }
    }
    return out;
}

// Solves the 6-parameter quadratic z = c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2
// over the 3x3 grid and returns the stationary point if it is a maximum.
std::optional<std::array<double, 2>> quadratic_peak(const std::array<double, 9>& z) {
    // Normal equations for the symmetric 3x3 stencil have a closed form.
    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
            const double v = z[(j + 1) * 3 + (i + 1)];
            s += v;
            sx += i * v;
            sy += j * v;
            sxx += i * i * v;
            sxy += i * j * v;
            syy += j * j * v;
        }
    }
    const double c1 = sx / 6.0;
    const double c2 = sy / 6.0;
    const double c4 = sxy / 4.0;
    const double c3 = sxx / 2.0 - s / 3.0;
    const double c5 = syy / 2.0 - s / 3.0;
    // Gradient zero: [2c3 c4; c4 2c5] p = -[c1; c2].
    const double a = 2.0 * c3;
    const double d = 2.0 * c5;
    const double det = a * d - c4 * c4;
    if (!(a < 0.0) || !(det > 0.0)) {
        return std::nullopt;
    }
    const double px = (-c1 * d + c4 * c2) / det;
    const double py = (-a * c2 + c4 * c1) / det;
    if (std::abs(px) > 1.0 || std::abs(py) > 1.0) {
        return std::nullopt;
    }
    return std::array<double, 2>{px, py};
}

}  // namespace

DicMeasurement dic_measure(const GrayImage& ref, const GrayImage& def, const DicParams& params) {
    params.validate();
    if (ref.width() != def.width() || ref.height() != def.height()) {
        throw ParameterError("DIC images differ in size");
    }
    const int w = ref.width();
    const int h = ref.height();
    const int r = params.subset_radius;
    const int s = params.search_radius;
    const auto subset = circular_subset(r);
    const auto n = static_cast<double>(subset.size());

    std::vector<DicSeed> seeds;
    for (int y = r; y + r < h; y += params.step) {
        for (int x = r; x + r < w; x += params.step) {
            bool inside = true;
            for (const auto& o : subset) {
                if (!ref.in_roi(x + o.dx, y + o.dy)) {
                    inside = false;
                    break;
                }
            }
            if (inside) {
                seeds.push_back({x, y});
            }
        }
    }
    if (seeds.empty()) {
        throw EmptyResultError("no DIC subset fits inside the region of interest");
    }

    const int side = 2 * s + 1;
    parallel_for_blocks(seeds.size(), [&](std::size_t idx) {
        DicSeed& seed = seeds[idx];
        std::vector<double> f(subset.size());
        double mean = 0.0;
        for (std::size_t k = 0; k < subset.size(); ++k) {
            f[k] = ref.at(seed.x + subset[k].dx, seed.y + subset[k].dy);
            mean += f[k];
        }
        mean /= n;
        double norm2 = 0.0;
        for (double& v : f) {
            v -= mean;
            norm2 += v * v;
        }
        if (!(norm2 > 0.0)) {
            return;  // textureless subset
        }
        const double fnorm = std::sqrt(norm2);

        const double nan = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> score(static_cast<std::size_t>(side) * side, nan);
        double best = -2.0;
        int best_dx = 0;
        int best_dy = 0;
        for (int dy = -s; dy <= s; ++dy) {
            const int cy = seed.y + dy;
            if (cy - r < 0 || cy + r >= h) {
                continue;
            }
            for (int dx = -s; dx <= s; ++dx) {
                const int cx = seed.x + dx;
                if (cx - r < 0 || cx + r >= w) {
                    continue;
                }
                double sg = 0.0;
                double sgg = 0.0;
                double sfg = 0.0;
                bool usable = true;
                for (std::size_t k = 0; k < subset.size(); ++k) {
                    if (!def.in_roi(cx + subset[k].dx, cy + subset[k].dy)) {
                        usable = false;  // masked pixels carry no texture
                        break;
                    }
                    const double g = def.at(cx + subset[k].dx, cy + subset[k].dy);
                    sg += g;
                    sgg += g * g;
                    sfg += f[k] * g;
                }
                const double var = sgg - sg * sg / n;
                if (!usable || !(var > 0.0)) {
                    continue;
                }
                const double zncc = sfg / (fnorm * std::sqrt(var));
                score[static_cast<std::size_t>(dy + s) * side + (dx + s)] = zncc;
                if (zncc > best) {
                    best = zncc;
                    best_dx = dx;
                    best_dy = dy;
                }
            }
        }
        seed.correlation = best;
        seed.peak_dx = best_dx;
        seed.peak_dy = best_dy;
        if (best < params.min_correlation) {
            return;
        }
        // A perfect match already sits on the lattice; a fitted surface
        // would only pull it off by the asymmetry of the neighbourhood.
        if (best >= 1.0 - kPerfectMatch) {
            seed.u = best_dx;
            seed.v = best_dy;
            seed.valid = true;
            return;
        }
        std::array<double, 9> z{};
        for (int j = -1; j <= 1; ++j) {
            for (int i = -1; i <= 1; ++i) {
                const int sx = best_dx + i + s;
                const int sy = best_dy + j + s;
                if (sx < 0 || sy < 0 || sx >= side || sy >= side) {
                    return;  // peak on the search boundary
                }
                const double v = score[static_cast<std::size_t>(sy) * side + sx];
                if (std::isnan(v)) {
                    return;
                }
                z[(j + 1) * 3 + (i + 1)] = v;
            }
        }
        const auto peak = quadratic_peak(z);
        if (!peak) {
            return;
        }
        seed.u = best_dx + (*peak)[0];
        seed.v = best_dy + (*peak)[1];
        seed.valid = true;
    });

    DicMeasurement out{DisplacementField(w, h), std::move(seeds)};
    std::fill(out.field.valid.begin(), out.field.valid.end(), 0);
    bool any = false;
    for (const auto& seed : out.seeds) {
        if (seed.valid) {
            const std::size_t i = out.field.index(seed.x, seed.y);
            out.field.u[i] = seed.u;
            out.field.v[i] = seed.v;
            out.field.valid[i] = 1;
            any = true;
        }
    }
    if (!any) {
        throw EmptyResultError("no DIC seed passed the correlation cut-off");
    }
    return out;
}

StrainField dic_strain(const DisplacementField& field, double strain_radius) {
    if (!(strain_radius > 0.0)) {
        throw ParameterError("strain radius must be positive");
    }
    StrainField out(field.width, field.height);
    const int reach = static_cast<int>(std::floor(strain_radius));
    const double r2 = strain_radius * strain_radius;
    parallel_for_blocks(static_cast<std::size_t>(field.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < field.width; ++x) {
            const std::size_t i = field.index(x, y);
            out.valid[i] = 0;
            if (!field.valid[i]) {
                continue;
            }
            // Local coordinates centred on the seed keep the normal
            // equations well conditioned.
            double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
            double su = 0, sxu = 0, syu = 0, sv = 0, sxv = 0, syv = 0;
            for (int dy = -reach; dy <= reach; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= field.height) {
                    continue;
                }
                for (int dx = -reach; dx <= reach; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= field.width || dx * dx + dy * dy > r2) {
                        continue;
                    }
                    const std::size_t k = field.index(xx, yy);
                    if (!field.valid[k]) {
                        continue;
                    }
                    n += 1;
                    sx += dx;
                    sy += dy;
                    sxx += dx * dx;
                    sxy += dx * dy;
                    syy += dy * dy;
                    su += field.u[k];
                    sxu += dx * field.u[k];
                    syu += dy * field.u[k];
                    sv += field.v[k];
                    sxv += dx * field.v[k];
                    syv += dy * field.v[k];
                }
            }
            if (n < 3) {
                continue;
            }
            // Plane a + b dx + c dy; solve the 3x3 normal equations by Cramer.
            const double m[3][3] = {{n, sx, sy}, {sx, sxx, sxy}, {sy, sxy, syy}};
            const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            if (std::abs(det) < 1e-9) {
                continue;  // collinear samples
            }
            auto slopes = [&](double r0, double r1, double r2v) {
                const double det_b = m[0][0] * (r1 * m[2][2] - m[1][2] * r2v) -
                                     r0 * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                                     m[0][2] * (m[1][0] * r2v - r1 * m[2][0]);
                const double det_c = m[0][0] * (m[1][1] * r2v - r1 * m[2][1]) -
                                     m[0][1] * (m[1][0] * r2v - r1 * m[2][0]) +
                                     r0 * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
                return std::array<double, 2>{det_b / det, det_c / det};
            };
            const auto gu = slopes(su, sxu, syu);
            const auto gv = slopes(sv, sxv, syv);
            const StrainTensor e = green_lagrange({gu[0], gu[1], gv[0], gv[1]});
            out.exx[i] = e.exx;
            out.eyy[i] = e.eyy;
            out.exy[i] = e.exy;
            out.valid[i] = 1;
        }
    });
    return out;
}

}  // namespace defreg
