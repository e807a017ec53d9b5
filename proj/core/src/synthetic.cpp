#include "defreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"
#include "defreg/rng.hpp"
#include "defreg/text_format.hpp"

namespace defreg {

void SpeckleParams::validate() const {
    if (!(density > 0.0)) {
        throw ParameterError("speckle density must be positive");
    }
    if (!(radius_min >= 1.0) || !(radius_max <= 8.0) || !(radius_min <= radius_max)) {
        throw ParameterError("speckle radii must satisfy 1 <= min <= max <= 8");
    }
    if (!(margin >= 0.0)) {
        throw ParameterError("speckle margin must be nonnegative");
    }
}

SpecklePattern::SpecklePattern(int width, int height, const SpeckleParams& params) {
    params.validate();
    if (width < 1 || height < 1) {
        throw ParameterError("speckle image must be at least 1x1");
    }
    x0_ = -params.margin;
    y0_ = -params.margin;
    const double span_x = width + 2.0 * params.margin;
    const double span_y = height + 2.0 * params.margin;
    // Each blob is truncated at 5 sigma = 2.5 radius; one cell holds that.
    cell_ = 2.5 * params.radius_max;
    cells_x_ = static_cast<int>(std::ceil(span_x / cell_)) + 1;
    cells_y_ = static_cast<int>(std::ceil(span_y / cell_)) + 1;
    cells_.assign(static_cast<std::size_t>(cells_x_) * cells_y_, {});

    Rng rng(mix_seed(params.seed, Stream::speckle));
    const auto count = static_cast<std::size_t>(std::llround(params.density / 100.0 * span_x * span_y));
    for (std::size_t b = 0; b < count; ++b) {
        const Vec2 centre{x0_ + rng.uniform() * span_x, y0_ + rng.uniform() * span_y};
        const double radius = rng.uniform(params.radius_min, params.radius_max);
        const double sigma = radius / 2.0;
        const double polarity = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double amplitude = polarity * rng.uniform(0.3, 0.5);
        const double cutoff = 5.0 * sigma;
        const Blob blob{centre, 1.0 / (2.0 * sigma * sigma), amplitude, cutoff * cutoff};
        const int cx0 = std::max(0, static_cast<int>(std::floor((centre.x - cutoff - x0_) / cell_)));
        const int cx1 = std::min(cells_x_ - 1, static_cast<int>(std::floor((centre.x + cutoff - x0_) / cell_)));
        const int cy0 = std::max(0, static_cast<int>(std::floor((centre.y - cutoff - y0_) / cell_)));
        const int cy1 = std::min(cells_y_ - 1, static_cast<int>(std::floor((centre.y + cutoff - y0_) / cell_)));
        for (int cy = cy0; cy <= cy1; ++cy) {
            for (int cx = cx0; cx <= cx1; ++cx) {
                cells_[static_cast<std::size_t>(cy) * cells_x_ + cx].push_back(blob);
            }
        }
    }
}

double SpecklePattern::value(Vec2 p) const {
    const double fx = std::floor((p.x - x0_) / cell_);
    const double fy = std::floor((p.y - y0_) / cell_);
    double v = 0.5;
    if (fx >= 0 && fy >= 0 && fx < cells_x_ && fy < cells_y_) {
        for (const Blob& b : cells_[static_cast<std::size_t>(fy) * cells_x_ + static_cast<std::size_t>(fx)]) {
            const double dx = p.x - b.centre.x;
            const double dy = p.y - b.centre.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < b.cutoff2) {
                v += b.amplitude * std::exp(-d2 * b.inv_two_sigma2);
            }
        }
    }
    return std::clamp(v, 0.0, 1.0);
}

GrayImage SpecklePattern::render(int width, int height) const {
    std::vector<double> data(static_cast<std::size_t>(width) * height);
    parallel_for_blocks(static_cast<std::size_t>(height), [&](std::size_t y) {
        for (int x = 0; x < width; ++x) {
            data[y * width + x] = value({static_cast<double>(x), static_cast<double>(y)});
        }
    });
    return GrayImage(width, height, std::move(data));
}

GrayImage generate_speckle(int width, int height, const SpeckleParams& params) {
    return SpecklePattern(width, height, params).render(width, height);
}

AnalyticField AnalyticField::translation(double tx, double ty) {
    return AnalyticField(Affine{Mat2{}, Vec2{tx, ty}});
}

AnalyticField AnalyticField::affine(Mat2 f, Vec2 offset) { return AnalyticField(Affine{f, offset}); }

AnalyticField AnalyticField::affine_about(Mat2 f, Vec2 anchor) {
    // u(X) = (F - I)(X - anchor)
    const Vec2 fa = f.apply(anchor);
    return AnalyticField(Affine{f, anchor - fa});
}

AnalyticField AnalyticField::rigid(double theta, Vec2 centre, Vec2 translation) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Mat2 r{c, -s, s, c};
    const Vec2 rc = r.apply(centre);
    return AnalyticField(Affine{r, centre - rc + translation});
}

AnalyticField AnalyticField::sinusoid(double amplitude, double period, Axis axis) {
    if (!(period > 0.0)) {
        throw ParameterError("sinusoid period must be positive");
    }
    return AnalyticField(Sinusoid{amplitude, period, axis});
}

Vec2 AnalyticField::displacement(Vec2 X) const {
    if (const auto* a = std::get_if<Affine>(&kind_)) {
        return {(a->f.xx - 1.0) * X.x + a->f.xy * X.y + a->offset.x,
                a->f.yx * X.x + (a->f.yy - 1.0) * X.y + a->offset.y};
    }
    const auto& s = std::get<Sinusoid>(kind_);
    const double arg = 2.0 * std::numbers::pi / s.period;
    if (s.axis == Axis::x) {
        return {s.amplitude * std::sin(arg * X.x), 0.0};
    }
    return {0.0, s.amplitude * std::sin(arg * X.y)};
}

DisplacementGradient AnalyticField::gradient(Vec2 X) const {
    if (const auto* a = std::get_if<Affine>(&kind_)) {
        return {a->f.xx - 1.0, a->f.xy, a->f.yx, a->f.yy - 1.0};
    }
    const auto& s = std::get<Sinusoid>(kind_);
    const double arg = 2.0 * std::numbers::pi / s.period;
    if (s.axis == Axis::x) {
        return {s.amplitude * arg * std::cos(arg * X.x), 0.0, 0.0, 0.0};
    }
    return {0.0, 0.0, 0.0, s.amplitude * arg * std::cos(arg * X.y)};
}

Vec2 AnalyticField::inverse(Vec2 x) const {
    Vec2 X = x - displacement(x);
    for (int it = 0; it < 50; ++it) {
        const Vec2 next = x - displacement(X);
        const double step = norm(next - X);
        X = next;
        if (step < 1e-10) {
            return X;
        }
    }
    if (norm(forward(X) - x) < 1e-6) {
        return X;
    }
    throw GenerationError("fixed-point inversion did not converge at (" + format_double(x.x) +
                          ", " + format_double(x.y) + ")");
}

AnalyticField AnalyticField::scaled(double s) const {
    if (const auto* a = std::get_if<Affine>(&kind_)) {
        const Mat2 f{1.0 + s * (a->f.xx - 1.0), s * a->f.xy, s * a->f.yx, 1.0 + s * (a->f.yy - 1.0)};
        return AnalyticField(Affine{f, s * a->offset});
    }
    auto sin = std::get<Sinusoid>(kind_);
    sin.amplitude *= s;
    return AnalyticField(sin);
}

void AnalyticField::check_no_folding(int width, int height) const {
    (void)width;
    (void)height;
    if (const auto* a = std::get_if<Affine>(&kind_)) {
        if (!(a->f.det() > 0.0)) {
            throw GenerationError("affine field folds: det F = " + format_double(a->f.det()));
        }
        return;
    }
    const auto& s = std::get<Sinusoid>(kind_);
    const double peak = std::abs(s.amplitude) * 2.0 * std::numbers::pi / s.period;
    if (!(peak < 1.0)) {
        throw GenerationError("sinusoid folds: peak gradient " + format_double(peak) + " >= 1");
    }
}

std::string AnalyticField::describe() const {
    std::ostringstream out;
    if (const auto* a = std::get_if<Affine>(&kind_)) {
        out << "affine F=[" << format_double(a->f.xx) << ',' << format_double(a->f.xy) << ';'
            << format_double(a->f.yx) << ',' << format_double(a->f.yy) << "] offset=("
            << format_double(a->offset.x) << ',' << format_double(a->offset.y) << ')';
    } else {
        const auto& s = std::get<Sinusoid>(kind_);
        out << "sinusoid A=" << format_double(s.amplitude) << " period=" << format_double(s.period)
            << " axis=" << (s.axis == Axis::x ? 'x' : 'y');
    }
    return out.str();
}

DisplacementField sample_field(const AnalyticField& field, int width, int height) {
    DisplacementField out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Vec2 d = field.displacement({static_cast<double>(x), static_cast<double>(y)});
            out.u[out.index(x, y)] = d.x;
            out.v[out.index(x, y)] = d.y;
        }
    }
    return out;
}

StrainField analytic_strain(const AnalyticField& field, int width, int height) {
    StrainField out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const StrainTensor e =
                green_lagrange(field.gradient({static_cast<double>(x), static_cast<double>(y)}));
            const std::size_t i = out.index(x, y);
            out.exx[i] = e.exx;
            out.eyy[i] = e.eyy;
            out.exy[i] = e.exy;
        }
    }
    return out;
}

namespace {

GrayImage add_noise(const GrayImage& image, double sigma, std::uint64_t seed, std::uint64_t frame) {
    if (sigma == 0.0) {
        return image;
    }
    const std::uint64_t base = mix_seed(seed, Stream::noise);
    std::vector<double> data(image.intensities().begin(), image.intensities().end());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            double& v = data[image.index(x, y)];
            v = std::clamp(v + sigma * hashed_normal(base, frame, static_cast<std::uint64_t>(x),
                                                     static_cast<std::uint64_t>(y)),
                           0.0, 1.0);
        }
    }
    std::vector<std::uint8_t> mask(image.mask().begin(), image.mask().end());
    return GrayImage(image.width(), image.height(), std::move(data), std::move(mask));
}

template <typename Sample>
GrayImage warp_frame(int width, int height, const AnalyticField& field, Sample sample) {
    std::vector<double> data(static_cast<std::size_t>(width) * height);
    std::vector<std::uint8_t> mask(data.size(), 1);
    parallel_for_blocks(static_cast<std::size_t>(height), [&](std::size_t y) {
        for (int x = 0; x < width; ++x) {
            const Vec2 psi = field.inverse({static_cast<double>(x), static_cast<double>(y)});
            bool inside = true;
            data[y * width + x] = std::clamp(sample(psi, inside), 0.0, 1.0);
            mask[y * width + x] = inside ? 1 : 0;
        }
    });
    if (std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
        mask.clear();
    }
    return GrayImage(width, height, std::move(data), std::move(mask));
}

void check_noise(double sigma) {
    if (!(sigma >= 0.0)) {
        throw ParameterError("noise sigma must be nonnegative");
    }
}

}  // namespace

SyntheticPair generate_pair(const GrayImage& base, const AnalyticField& field, double noise_sigma,
                            std::uint64_t seed) {
    check_noise(noise_sigma);
    field.check_no_folding(base.width(), base.height());
    const GrayImage deformed =
        warp_frame(base.width(), base.height(), field, [&](Vec2 psi, bool& inside) {
            if (!base.contains(psi)) {
                inside = false;
                psi.x = std::clamp(psi.x, -0.5, base.width() - 0.5);
                psi.y = std::clamp(psi.y, -0.5, base.height() - 0.5);
            }
            return interpolate(base, psi, Interpolation::cubic_bspline);
        });
    return {add_noise(base, noise_sigma, seed, 0), add_noise(deformed, noise_sigma, seed, 1),
            sample_field(field, base.width(), base.height())};
}

SyntheticPair generate_pair(const SpecklePattern& pattern, int width, int height,
                            const AnalyticField& field, double noise_sigma, std::uint64_t seed) {
    check_noise(noise_sigma);
    field.check_no_folding(width, height);
    const GrayImage reference = pattern.render(width, height);
    const GrayImage deformed = warp_frame(width, height, field,
                                          [&](Vec2 psi, bool&) { return pattern.value(psi); });
    return {add_noise(reference, noise_sigma, seed, 0), add_noise(deformed, noise_sigma, seed, 1),
            sample_field(field, width, height)};
}

SyntheticSequence generate_sequence(const SpecklePattern& pattern, int width, int height,
                                    std::span<const AnalyticField> cumulative, double noise_sigma,
                                    std::uint64_t seed) {
    check_noise(noise_sigma);
    SyntheticSequence seq;
    seq.frames.push_back(add_noise(pattern.render(width, height), noise_sigma, seed, 0));
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
        const AnalyticField& field = cumulative[i];
        field.check_no_folding(width, height);
        const GrayImage frame = warp_frame(width, height, field,
                                           [&](Vec2 psi, bool&) { return pattern.value(psi); });
        seq.frames.push_back(add_noise(frame, noise_sigma, seed, i + 1));
        seq.truths.push_back(sample_field(field, width, height));
    }
    return seq;
}

}  // namespace defreg
