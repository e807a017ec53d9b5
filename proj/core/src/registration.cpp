#include "defreg/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"
#include "defreg/rng.hpp"
#include "defreg/text_format.hpp"
#include "defreg/validation.hpp"

namespace defreg {

void RegistrationConfig::validate() const {
    if (!(spacing.x > 0.0) || !(spacing.y > 0.0)) {
        throw ParameterError("registration.spacing must be positive, got (" +
                             format_double(spacing.x) + ", " + format_double(spacing.y) + ")");
    }
    if (samples < 64) {
        throw ParameterError("registration.samples must be at least 64");
    }
    if (pyramid_levels.empty()) {
        throw ParameterError("registration.pyramid needs at least one level");
    }
    for (std::size_t i = 0; i < pyramid_levels.size(); ++i) {
        if (pyramid_levels[i] < 0) {
            throw ParameterError("registration.pyramid levels must be nonnegative");
        }
        if (i > 0 && pyramid_levels[i] >= pyramid_levels[i - 1]) {
            throw ParameterError("registration.pyramid levels must be strictly decreasing");
        }
    }
    asgd.validate();
}

PairResult register_pair(const GrayImage& fixed, const GrayImage& moving,
                         const RegistrationConfig& config) {
    config.validate();
    if (fixed.width() != moving.width() || fixed.height() != moving.height()) {
        throw ParameterError("fixed and moving images differ in size");
    }
    // Grid spacing doubles with each level above the finest one, so coarse
    // levels fit coarse motion; the fit is carried to the next grid.
    const int finest = config.pyramid_levels.back();
    auto level_spacing = [&](int level) {
        return std::ldexp(1.0, level - finest) * config.spacing;
    };
    PairResult result{new_transform(fixed.width(), fixed.height(),
                                     level_spacing(config.pyramid_levels.front())),
                      {}, {}, false};

    for (const int level : config.pyramid_levels) {
        const Vec2 spacing = level_spacing(level);
        if (spacing.x != result.transform.spacing().x || spacing.y != result.transform.spacing().y) {
            result.transform = refit_transform(result.transform, spacing);
        }
        const GrayImage level_fixed = pyramid_level(fixed, level);
        const GrayImage level_moving = pyramid_level(moving, level);
        const RandomSampler sampler(level_fixed);
        const double scale = std::ldexp(1.0, level);
        const MetricOptions options{scale, 32};

        AsgdConfig asgd = config.asgd;
        asgd.seed = mix_seed(config.asgd.seed, Stream::sampling, static_cast<std::uint64_t>(level));
        asgd.initial_step = config.asgd.initial_step * scale;

        auto evaluate = [&](const BSplineTransform& t, std::uint64_t sample_seed) {
            const SampleSet samples = sampler.draw(config.samples, sample_seed);
            return metric_value_and_gradient(config.metric, level_fixed, level_moving, t, samples,
                                             options);
        };
        auto [transform, trace] = optimize(evaluate, result.transform, asgd);
        result.transform = std::move(transform);
        result.level_traces.push_back(trace);
        result.trace = std::move(trace);
        if (result.trace.aborted) {
            result.aborted = true;
            break;
        }
    }
    return result;
}

GrayImage resample_moving(const GrayImage& moving, const BSplineTransform& transform,
                          Interpolation scheme) {
    const int w = transform.domain_width();
    const int h = transform.domain_height();
    moving.spline_coefficients();
    std::vector<double> data(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> mask(data.size(), 1);
    parallel_for_blocks(static_cast<std::size_t>(h), [&](std::size_t y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = y * static_cast<std::size_t>(w) + x;
            Vec2 p = transform.transform_point({static_cast<double>(x), static_cast<double>(y)});
            if (!moving.contains(p)) {
                mask[i] = 0;
                p.x = std::clamp(p.x, -0.5, moving.width() - 0.5);
                p.y = std::clamp(p.y, -0.5, moving.height() - 0.5);
            }
            data[i] = std::clamp(interpolate(moving, p, scheme), 0.0, 1.0);
        }
    });
    return GrayImage(w, h, std::move(data), std::move(mask));
}

DisplacementField displacement_from_transform(const BSplineTransform& transform) {
    DisplacementField field(transform.domain_width(), transform.domain_height());
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            const Vec2 d = transform.displacement({static_cast<double>(x), static_cast<double>(y)});
            field.u[field.index(x, y)] = d.x;
            field.v[field.index(x, y)] = d.y;
        }
    }
    return field;
}

namespace {

double step_ssim(const GrayImage& fixed, const GrayImage& warped) {
    std::vector<std::uint8_t> region(warped.mask().begin(), warped.mask().end());
    for (int y = 0; y < fixed.height(); ++y) {
        for (int x = 0; x < fixed.width(); ++x) {
            region[fixed.index(x, y)] &= fixed.in_roi(x, y) ? 1 : 0;
        }
    }
    try {
        return ssim(fixed, warped, region).mean;
    } catch (const ParameterError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

SequenceResult register_sequence(std::span<const GrayImage> images,
                                 const RegistrationConfig& config) {
    if (images.size() < 2) {
        throw ParameterError("a sequence needs at least two images");
    }
    for (const auto& img : images) {
        if (img.width() != images[0].width() || img.height() != images[0].height()) {
            throw ParameterError("sequence images differ in size");
        }
    }
    const int w = images[0].width();
    const int h = images[0].height();

    // Tracked positions x^(i) of every undeformed-grid pixel X.
    std::vector<Vec2> tracked(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> alive(tracked.size(), 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            tracked[static_cast<std::size_t>(y) * w + x] = {static_cast<double>(x),
                                                             static_cast<double>(y)};
        }
    }

    SequenceResult result;
    bool upstream_abort = false;
    for (std::size_t i = 0; i + 1 < images.size(); ++i) {
        RegistrationConfig step_config = config;
        step_config.asgd.seed = mix_seed(config.asgd.seed, static_cast<std::uint64_t>(i));
        PairResult pair = register_pair(images[i], images[i + 1], step_config);
        upstream_abort = upstream_abort || pair.aborted;

        const BSplineTransform& t = pair.transform;
        DisplacementField cumulative(w, h);
        parallel_for_blocks(static_cast<std::size_t>(h), [&](std::size_t y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t k = y * static_cast<std::size_t>(w) + x;
                if (alive[k]) {
                    const Vec2 next = t.transform_point(tracked[k]);
                    if (t.domain_contains(next)) {
                        tracked[k] = next;
                    } else {
                        alive[k] = 0;
                    }
                }
                cumulative.valid[k] = alive[k];
                if (alive[k]) {
                    cumulative.u[k] = tracked[k].x - static_cast<double>(x);
                    cumulative.v[k] = tracked[k].y - static_cast<double>(y);
                }
            }
        });

        const GrayImage warped = resample_moving(images[i + 1], t, config.interpolation);
        SequenceStep step{t, std::move(pair.trace), std::move(cumulative),
                          step_ssim(images[i], warped), pair.aborted, upstream_abort};
        result.steps.push_back(std::move(step));
    }
    return result;
}

const DisplacementField& cumulative_displacement(const SequenceResult& result, std::size_t step) {
    if (step >= result.steps.size()) {
        throw std::out_of_range("sequence step " + std::to_string(step) + " out of range (" +
                                std::to_string(result.steps.size()) + " steps)");
    }
    return result.steps[step].cumulative;
}

void write_sequence_report(std::ostream& out, const SequenceResult& result) {
    out << "# defreg sequence report\n";
    out << "steps " << result.steps.size() << '\n';
    for (std::size_t i = 0; i < result.steps.size(); ++i) {
        const auto& s = result.steps[i];
        const double final_value =
            s.trace.iterations.empty() ? std::nan("") : s.trace.iterations.back().value;
        out << "step " << i << " ssim_mean=" << format_double(s.ssim_mean)
            << " aborted=" << (s.aborted ? 1 : 0) << " upstream_abort=" << (s.upstream_abort ? 1 : 0)
            << " final_value=" << format_double(final_value)
            << " valid_pixels=" << s.cumulative.valid_count() << '\n';
    }
}

}  // namespace defreg
