#include "defreg/image.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "defreg/errors.hpp"

namespace defreg {

namespace detail {
struct SplineCache {
    std::once_flag once;
    std::vector<double> coefficients;
};
}  // namespace detail

namespace {

int mirror_index(int k, int n) {
    if (n == 1) {
        return 0;
    }
    const int period = 2 * n - 2;
    k = std::abs(k) % period;
    return k >= n ? period - k : k;
}

void check_domain(const GrayImage& image, Vec2 p) {
    if (!(image.contains(p))) {
        throw OutOfBoundsError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                               ") outside " + std::to_string(image.width()) + "x" +
                               std::to_string(image.height()) + " image domain");
    }
}

std::vector<double> compute_coefficients(const GrayImage& image) {
    const int w = image.width();
    const int h = image.height();
    std::vector<double> c(image.intensities().begin(), image.intensities().end());
    for (int y = 0; y < h; ++y) {
        prefilter_cubic_line(std::span<double>(c).subspan(static_cast<std::size_t>(y) * w, w));
    }
    std::vector<double> column(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            column[y] = c[image.index(x, y)];
        }
        prefilter_cubic_line(column);
        for (int y = 0; y < h; ++y) {
            c[image.index(x, y)] = column[y];
        }
    }
    return c;
}

// Stored pixel when p sits exactly on a node; keeps resampling bit-exact for
// integer-valued mappings.
bool node_value(const GrayImage& image, Vec2 p, double& out) {
    const double fx = std::floor(p.x);
    const double fy = std::floor(p.y);
    if (fx != p.x || fy != p.y) {
        return false;
    }
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    if (ix < 0 || iy < 0 || ix >= image.width() || iy >= image.height()) {
        return false;
    }
    out = image.at(ix, iy);
    return true;
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::vector<double> intensities,
                     std::vector<std::uint8_t> mask)
    : width_(width),
      height_(height),
      data_(std::move(intensities)),
      mask_(std::move(mask)),
      cache_(std::make_shared<detail::SplineCache>()) {
    if (width < 1 || height < 1) {
        throw ParameterError("image dimensions must be at least 1x1");
    }
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (data_.size() != n) {
        throw ParameterError("intensity count " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
    if (!mask_.empty() && mask_.size() != n) {
        throw ParameterError("mask dimensions differ from image dimensions");
    }
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ParameterError("intensity " + std::to_string(v) + " outside [0, 1]");
        }
    }
}

GrayImage GrayImage::constant(int width, int height, double value) {
    return GrayImage(width, height,
                     std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                             static_cast<std::size_t>(std::max(height, 0)),
                                         value));
}

GrayImage GrayImage::with_mask(std::vector<std::uint8_t> mask) const {
    GrayImage out(*this);
    if (mask.size() != data_.size()) {
        throw ParameterError("mask dimensions differ from image dimensions");
    }
    out.mask_ = std::move(mask);
    return out;
}

GrayImage GrayImage::without_mask() const {
    GrayImage out(*this);
    out.mask_.clear();
    return out;
}

std::span<const double> GrayImage::spline_coefficients() const {
    std::call_once(cache_->once, [this] { cache_->coefficients = compute_coefficients(*this); });
    return cache_->coefficients;
}

double bspline3(double t) {
    t = std::abs(t);
    if (t < 1.0) {
        return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
    }
    if (t < 2.0) {
        const double s = 2.0 - t;
        return s * s * s / 6.0;
    }
    return 0.0;
}

double bspline3_derivative(double t) {
    const double a = std::abs(t);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    if (a < 1.0) {
        return sign * (-2.0 * a + 1.5 * a * a);
    }
    if (a < 2.0) {
        const double s = 2.0 - a;
        return sign * (-0.5 * s * s);
    }
    return 0.0;
}

CubicWeights cubic_bspline_weights(double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double v = 1.0 - u;
    return {{v * v * v / 6.0, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
             (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0, u3 / 6.0}};
}

CubicWeights cubic_bspline_derivative_weights(double u) {
    const double u2 = u * u;
    const double v = 1.0 - u;
    return {{-0.5 * v * v, 1.5 * u2 - 2.0 * u, -1.5 * u2 + u + 0.5, 0.5 * u2}};
}

void prefilter_cubic_line(std::span<double> c) {
    const std::size_t n = c.size();
    if (n < 2) {
        return;
    }
    const double z = std::sqrt(3.0) - 2.0;
    const double gain = (1.0 - z) * (1.0 - 1.0 / z);
    for (double& v : c) {
        v *= gain;
    }

    // Causal initialization for the mirror-extended signal.
    const double tolerance = 1e-16;
    const auto horizon =
        static_cast<std::size_t>(std::ceil(std::log(tolerance) / std::log(std::abs(z))));
    double sum = 0.0;
    if (horizon < n) {
        double zn = z;
        sum = c[0];
        for (std::size_t k = 1; k < horizon; ++k) {
            sum += zn * c[k];
            zn *= z;
        }
    } else {
        double zn = z;
        const double iz = 1.0 / z;
        double z2n = std::pow(z, static_cast<double>(n - 1));
        sum = c[0] + z2n * c[n - 1];
        z2n *= z2n * iz;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            sum += (zn + z2n) * c[k];
            zn *= z;
            z2n *= iz;
        }
        sum /= (1.0 - zn * zn);
    }
    c[0] = sum;
    for (std::size_t k = 1; k < n; ++k) {
        c[k] += z * c[k - 1];
    }
    c[n - 1] = (z / (z * z - 1.0)) * (c[n - 1] + z * c[n - 2]);
    for (std::size_t k = n - 1; k-- > 0;) {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

namespace {

double bilinear(const GrayImage& image, Vec2 p) {
    const double x = std::clamp(p.x, 0.0, static_cast<double>(image.width() - 1));
    const double y = std::clamp(p.y, 0.0, static_cast<double>(image.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, image.width() - 1);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * image.at(x0, y0) + fx * image.at(x1, y0);
    const double bottom = (1.0 - fx) * image.at(x0, y1) + fx * image.at(x1, y1);
    return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

ValueAndGradient sample_cubic(const GrayImage& image, Vec2 p) {
    check_domain(image, p);
    const auto coeffs = image.spline_coefficients();
    const int w = image.width();
    const int h = image.height();
    const double fx = std::floor(p.x);
    const double fy = std::floor(p.y);
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    const CubicWeights wx = cubic_bspline_weights(p.x - fx);
    const CubicWeights wy = cubic_bspline_weights(p.y - fy);
    const CubicWeights dx = cubic_bspline_derivative_weights(p.x - fx);
    const CubicWeights dy = cubic_bspline_derivative_weights(p.y - fy);

    int cols[4];
    for (int a = 0; a < 4; ++a) {
        cols[a] = mirror_index(ix - 1 + a, w);
    }
    ValueAndGradient out;
    for (int b = 0; b < 4; ++b) {
        const std::size_t row = static_cast<std::size_t>(mirror_index(iy - 1 + b, h)) * w;
        double s = 0.0;
        double sd = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double c = coeffs[row + cols[a]];
            s += wx.w[a] * c;
            sd += dx.w[a] * c;
        }
        out.value += wy.w[b] * s;
        out.gradient.x += wy.w[b] * sd;
        out.gradient.y += dy.w[b] * s;
    }
    double exact = 0.0;
    if (node_value(image, p, exact)) {
        out.value = exact;
    }
    return out;
}

double interpolate(const GrayImage& image, Vec2 p, Interpolation scheme) {
    check_domain(image, p);
    double exact = 0.0;
    if (node_value(image, p, exact)) {
        return exact;
    }
    if (scheme == Interpolation::bilinear) {
        return bilinear(image, p);
    }
    return sample_cubic(image, p).value;
}

Vec2 intensity_gradient(const GrayImage& image, Vec2 p) { return sample_cubic(image, p).gradient; }

GrayImage gaussian_smooth(const GrayImage& image, double sigma) {
    if (!(sigma > 0.0)) {
        return image;
    }
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * (k * k) / (sigma * sigma));
        kernel[k + radius] = v;
        total += v;
    }
    for (double& v : kernel) {
        v /= total;
    }

    const int w = image.width();
    const int h = image.height();
    const auto src = image.intensities();
    std::vector<double> tmp(src.size());
    std::vector<double> out(src.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                s += kernel[k + radius] * src[image.index(mirror_index(x + k, w), y)];
            }
            tmp[image.index(x, y)] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                s += kernel[k + radius] * tmp[image.index(x, mirror_index(y + k, h))];
            }
            out[image.index(x, y)] = std::clamp(s, 0.0, 1.0);
        }
    }
    std::vector<std::uint8_t> mask(image.mask().begin(), image.mask().end());
    return GrayImage(w, h, std::move(out), std::move(mask));
}

GrayImage pyramid_level(const GrayImage& image, int level) {
    if (level < 0) {
        throw ParameterError("pyramid level must be nonnegative");
    }
    if (level == 0) {
        return image;
    }
    const int factor = 1 << level;
    const int cw = image.width() / factor;
    const int ch = image.height() / factor;
    if (cw < 8 || ch < 8) {
        throw LevelTooDeepError("pyramid level " + std::to_string(level) + " of a " +
                                std::to_string(image.width()) + "x" +
                                std::to_string(image.height()) + " image is smaller than 8x8");
    }
    const GrayImage smooth = gaussian_smooth(image.without_mask(), std::ldexp(1.0, level - 1));
    std::vector<double> data(static_cast<std::size_t>(cw) * ch);
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            data[static_cast<std::size_t>(y) * cw + x] = smooth.at(x * factor, y * factor);
        }
    }
    std::vector<std::uint8_t> mask;
    if (image.has_mask()) {
        mask.assign(data.size(), 0);
        for (int y = 0; y < ch; ++y) {
            for (int x = 0; x < cw; ++x) {
                bool inside = true;
                for (int dy = 0; dy < factor && inside; ++dy) {
                    for (int dx = 0; dx < factor && inside; ++dx) {
                        inside = image.in_roi(x * factor + dx, y * factor + dy);
                    }
                }
                mask[static_cast<std::size_t>(y) * cw + x] = inside ? 1 : 0;
            }
        }
    }
    return GrayImage(cw, ch, std::move(data), std::move(mask));
}

}  // namespace defreg
