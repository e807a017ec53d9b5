#include "defreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"
#include "defreg/rng.hpp"

namespace defreg {

MetricKind parse_metric_kind(std::string_view name) {
    if (name == "SSD" || name == "ssd") {
        return MetricKind::ssd;
    }
    if (name == "NCC" || name == "ncc") {
        return MetricKind::ncc;
    }
    if (name == "MI" || name == "mi") {
        return MetricKind::mi;
    }
    throw ConfigError("unknown metric '" + std::string(name) + "' (expected SSD, NCC or MI)");
}

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::ssd:
            return "SSD";
        case MetricKind::ncc:
            return "NCC";
        case MetricKind::mi:
            return "MI";
    }
    return "?";
}

RandomSampler::RandomSampler(const GrayImage& fixed) : width_(fixed.width()) {
    for (int y = 0; y < fixed.height(); ++y) {
        for (int x = 0; x < fixed.width(); ++x) {
            if (fixed.in_roi(x, y)) {
                roi_.push_back(static_cast<std::uint32_t>(fixed.index(x, y)));
            }
        }
    }
}

SampleSet RandomSampler::draw(std::size_t n, std::uint64_t seed) const {
    if (roi_.empty()) {
        throw ConfigError("sampling region of interest is empty");
    }
    if (n == 0) {
        throw ConfigError("sample count must be at least 1");
    }
    SampleSet set;
    set.count = n;
    set.seed = seed;
    set.points.reserve(n);
    Rng rng(mix_seed(seed, Stream::sampling));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t pixel = roi_[rng.below(roi_.size())];
        const double jx = rng.uniform() - 0.5;
        const double jy = rng.uniform() - 0.5;
        set.points.push_back({static_cast<double>(pixel % width_) + jx,
                              static_cast<double>(pixel / width_) + jy});
    }
    return set;
}

SampleSet draw_samples(const GrayImage& fixed, std::size_t n, std::uint64_t seed) {
    return RandomSampler(fixed).draw(n, seed);
}

namespace {

struct SampleEval {
    bool valid = false;
    double fixed = 0.0;
    double moving = 0.0;
    Vec2 gradient;  // d moving / d position, full-resolution units
    SupportWeights support;
};

void scatter(std::vector<double>& grad, std::size_t n_points, const SampleEval& s, double coef) {
    if (coef == 0.0) {
        return;
    }
    const double gx = coef * s.gradient.x;
    const double gy = coef * s.gradient.y;
    for (std::size_t k = 0; k < 16; ++k) {
        const double w = s.support.weight[k];
        grad[s.support.index[k]] += w * gx;
        grad[s.support.index[k] + n_points] += w * gy;
    }
}

void ssd(const std::vector<SampleEval>& evals, std::size_t n_valid, std::size_t n_points,
         MetricReport& report) {
    const double inv = 1.0 / static_cast<double>(n_valid);
    double sum = 0.0;
    for (const auto& s : evals) {
        if (!s.valid) {
            continue;
        }
        const double d = s.moving - s.fixed;
        sum += d * d;
        scatter(report.gradient, n_points, s, 2.0 * inv * d);
    }
    report.value = sum * inv;
}

void ncc(const std::vector<SampleEval>& evals, std::size_t n_valid, std::size_t n_points,
         MetricReport& report) {
    const double inv = 1.0 / static_cast<double>(n_valid);
    double mean_f = 0.0;
    double mean_m = 0.0;
    for (const auto& s : evals) {
        if (s.valid) {
            mean_f += s.fixed;
            mean_m += s.moving;
        }
    }
    mean_f *= inv;
    mean_m *= inv;
    double sff = 0.0;
    double smm = 0.0;
    double sfm = 0.0;
    for (const auto& s : evals) {
        if (s.valid) {
            const double df = s.fixed - mean_f;
            const double dm = s.moving - mean_m;
            sff += df * df;
            smm += dm * dm;
            sfm += df * dm;
        }
    }
    if (!(sff > 0.0) || !(smm > 0.0)) {
        report.value = 0.0;
        return;
    }
    const double denom = std::sqrt(sff * smm);
    const double r = sfm / denom;
    report.value = -r;
    for (const auto& s : evals) {
        if (s.valid) {
            const double dr = (s.fixed - mean_f) / denom - r * (s.moving - mean_m) / smm;
            scatter(report.gradient, n_points, s, -dr);
        }
    }
}

void mutual_information(const std::vector<SampleEval>& evals, std::size_t n_valid,
                        std::size_t n_points, int bins, MetricReport& report) {
    if (bins < 5) {
        throw ParameterError("mutual information needs at least 5 histogram bins");
    }
    const double inv = 1.0 / static_cast<double>(n_valid);
    // Moving intensity m maps to continuous bin coordinate 1 + m (bins - 3),
    // so the cubic window's four taps always land on bins 0..bins-1.
    const double moving_scale = static_cast<double>(bins - 3);
    const auto nb = static_cast<std::size_t>(bins);
    std::vector<double> joint(nb * nb, 0.0);
    std::vector<double> fixed_marginal(nb, 0.0);
    std::vector<double> moving_marginal(nb, 0.0);

    std::vector<int> fixed_bin(evals.size(), 0);
    std::vector<double> eta(evals.size(), 0.0);
    std::vector<std::uint8_t> clamped(evals.size(), 0);
    for (std::size_t i = 0; i < evals.size(); ++i) {
        const auto& s = evals[i];
        if (!s.valid) {
            continue;
        }
        const double f = std::clamp(s.fixed, 0.0, 1.0);
        fixed_bin[i] = std::min(bins - 1, static_cast<int>(f * bins));
        const double m = std::clamp(s.moving, 0.0, 1.0);
        clamped[i] = (s.moving < 0.0 || s.moving > 1.0) ? 1 : 0;
        eta[i] = 1.0 + m * moving_scale;
        const int base = static_cast<int>(std::floor(eta[i]));
        for (int j = base - 1; j <= base + 2; ++j) {
            if (j < 0 || j >= bins) {
                continue;
            }
            const double w = bspline3(eta[i] - j) * inv;
            joint[static_cast<std::size_t>(fixed_bin[i]) * nb + j] += w;
        }
        fixed_marginal[fixed_bin[i]] += inv;
    }
    for (std::size_t f = 0; f < nb; ++f) {
        for (std::size_t j = 0; j < nb; ++j) {
            moving_marginal[j] += joint[f * nb + j];
        }
    }

    double mi = 0.0;
    std::vector<double> log_ratio(nb * nb, 0.0);
    for (std::size_t f = 0; f < nb; ++f) {
        for (std::size_t j = 0; j < nb; ++j) {
            const double p = joint[f * nb + j];
            if (p > 0.0 && fixed_marginal[f] > 0.0 && moving_marginal[j] > 0.0) {
                const double lr = std::log(p / (fixed_marginal[f] * moving_marginal[j]));
                log_ratio[f * nb + j] = lr;
                mi += p * lr;
            }
        }
    }
    report.value = -mi;

    // dMI/dmu = sum_{f,j} dp(f,j)/dmu * log(p / (pf pm)); the marginal terms
    // cancel because each sample's window sums to one.
    for (std::size_t i = 0; i < evals.size(); ++i) {
        const auto& s = evals[i];
        if (!s.valid || clamped[i]) {
            continue;
        }
        const int base = static_cast<int>(std::floor(eta[i]));
        double acc = 0.0;
        for (int j = base - 1; j <= base + 2; ++j) {
            if (j < 0 || j >= bins) {
                continue;
            }
            acc += bspline3_derivative(eta[i] - j) *
                   log_ratio[static_cast<std::size_t>(fixed_bin[i]) * nb + j];
        }
        scatter(report.gradient, n_points, s, -inv * moving_scale * acc);
    }
}

}  // namespace

MetricReport metric_value_and_gradient(MetricKind kind, const GrayImage& fixed,
                                       const GrayImage& moving, const BSplineTransform& transform,
                                       const SampleSet& samples, const MetricOptions& options) {
    const std::size_t n = samples.points.size();
    if (n == 0) {
        throw ConfigError("empty sample set");
    }
    const double scale = options.coordinate_scale;
    const double inv_scale = 1.0 / scale;

    // Warm the lazily built coefficient caches before fanning out.
    fixed.spline_coefficients();
    moving.spline_coefficients();

    std::vector<SampleEval> evals(n);
    parallel_for_blocks(block_count(n), [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * kBlockSize);
        for (std::size_t i = b * kBlockSize; i < end; ++i) {
            SampleEval& e = evals[i];
            const Vec2 x = samples.points[i];
            const Vec2 full = scale * x;
            if (!fixed.contains(x) || !transform.covers(full)) {
                continue;
            }
            e.support = transform.support(full);
            const Vec2 mapped = inv_scale * (full + transform.weighted_displacement(e.support));
            if (!moving.contains(mapped)) {
                continue;
            }
            e.fixed = sample_cubic(fixed, x).value;
            const ValueAndGradient vg = sample_cubic(moving, mapped);
            e.moving = vg.value;
            e.gradient = inv_scale * vg.gradient;
            e.valid = true;
        }
    });

    const auto n_valid = static_cast<std::size_t>(
        std::count_if(evals.begin(), evals.end(), [](const SampleEval& e) { return e.valid; }));
    MetricReport report;
    report.valid_fraction = static_cast<double>(n_valid) / static_cast<double>(n);
    report.gradient.assign(transform.parameter_count(), 0.0);
    if (2 * n_valid <= n) {
        throw DegenerateOverlapError("only " + std::to_string(n_valid) + " of " +
                                     std::to_string(n) +
                                     " samples map inside the moving image");
    }

    const std::size_t n_points = transform.control_point_count();
    switch (kind) {
        case MetricKind::ssd:
            ssd(evals, n_valid, n_points, report);
            break;
        case MetricKind::ncc:
            ncc(evals, n_valid, n_points, report);
            break;
        case MetricKind::mi:
            mutual_information(evals, n_valid, n_points, options.histogram_bins, report);
            break;
    }
    return report;
}

}  // namespace defreg
