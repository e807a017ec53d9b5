#include "defreg/asgd.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "defreg/errors.hpp"
#include "defreg/rng.hpp"
#include "defreg/text_format.hpp"

namespace defreg {

void AsgdConfig::validate() const {
    if (max_iterations < 1) {
        throw ParameterError("asgd.max_iterations must be at least 1");
    }
    if (a && !(*a > 0.0)) {
        throw ParameterError("asgd.a must be positive");
    }
    if (!(A >= 1.0)) {
        throw ParameterError("asgd.A must be at least 1");
    }
    if (!(alpha > 0.5 && alpha <= 1.0)) {
        throw ParameterError("asgd.alpha must lie in (0.5, 1], got " + format_double(alpha));
    }
    if (!(time_window > 0.0)) {
        throw ParameterError("asgd.time_window must be positive");
    }
    if (!(initial_step > 0.0)) {
        throw ParameterError("asgd.initial_step must be positive");
    }
}

namespace {

double largest_point_step(std::span<const double> g, std::size_t n_points) {
    double best = 0.0;
    for (std::size_t k = 0; k < n_points; ++k) {
        best = std::max(best, std::hypot(g[k], g[k + n_points]));
    }
    return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Largest curvature of the cost near `transform`, by a few power iterations on
// finite differences of the gradient (same sample seed, so the sampling noise
// mostly cancels). Returns 0 when no positive curvature was seen.
double curvature_bound(const MetricEvaluator& evaluate, const BSplineTransform& transform,
                       const std::vector<double>& g0, std::uint64_t seed, double probe_step) {
    constexpr int kProbes = 4;
    const std::size_t n_points = transform.control_point_count();
    std::vector<double> v = g0;
    double best = 0.0;
    for (int j = 0; j < kProbes; ++j) {
        const double v_norm = std::sqrt(dot(v, v));
        if (!(v_norm > 0.0)) {
            break;
        }
        for (double& x : v) {
            x /= v_norm;
        }
        const double eps = probe_step / largest_point_step(v, n_points);
        BSplineTransform probe = transform;
        auto mu = probe.coefficients();
        for (std::size_t i = 0; i < mu.size(); ++i) {
            mu[i] += eps * v[i];
        }
        MetricReport report;
        try {
            report = evaluate(probe, seed);
        } catch (const DegenerateOverlapError&) {
            break;
        }
        std::vector<double> hv(v.size());
        for (std::size_t i = 0; i < hv.size(); ++i) {
            hv[i] = (report.gradient[i] - g0[i]) / eps;
        }
        best = std::max(best, dot(v, hv));
        v = std::move(hv);
    }
    return best;
}

}  // namespace

std::pair<BSplineTransform, OptimizeTrace> optimize(const MetricEvaluator& evaluate,
                                                    BSplineTransform transform,
                                                    const AsgdConfig& config) {
    config.validate();
    OptimizeTrace trace;
    trace.iterations.reserve(static_cast<std::size_t>(config.max_iterations));

    const std::size_t n_points = transform.control_point_count();
    double a = config.a.value_or(0.0);
    double time = 0.0;
    std::vector<double> previous;
    double previous_norm = 0.0;

    for (int k = 0; k < config.max_iterations; ++k) {
        MetricReport report;
        try {
            report = evaluate(transform, mix_seed(config.seed, static_cast<std::uint64_t>(k)));
        } catch (const DegenerateOverlapError& e) {
            trace.aborted = true;
            trace.abort_reason = e.what();
            break;
        }
        const std::vector<double>& g = report.gradient;
        const double g_norm = std::sqrt(dot(g, g));

        if (k == 0 && !config.a) {
            const double largest = largest_point_step(g, n_points);
            const double base = std::pow(config.A, config.alpha);
            a = largest > 0.0 ? base * config.initial_step / largest : base;
            // Starting at (or near) the optimum, g is mostly sampling noise and
            // the rule above overshoots badly; keep the first gain below the
            // inverse curvature.
            const double curvature =
                curvature_bound(evaluate, transform, g, mix_seed(config.seed, std::uint64_t{0}),
                                0.25 * config.initial_step);
            if (curvature > 0.0) {
                a = std::min(a, base / curvature);
            }
        }
        const double gain = a / std::pow(config.A + time, config.alpha);
        trace.iterations.push_back({report.value, g_norm, gain, time, report.valid_fraction});

        // No control point moves more than initial_step in one iteration: the
        // gain is calibrated where the cost may be flat, and a basin's much
        // steeper walls would otherwise throw the iterate straight out.
        const double largest_step = gain * largest_point_step(g, n_points);
        const double cap = largest_step > config.initial_step ? config.initial_step / largest_step
                                                              : 1.0;
        auto mu = transform.coefficients();
        for (std::size_t i = 0; i < mu.size(); ++i) {
            mu[i] -= cap * gain * g[i];
        }

        // The inner product is taken between unit gradients so the time
        // window is dimensionless.
        if (k > 0 && g_norm > 0.0 && previous_norm > 0.0) {
            const double agreement = dot(g, previous) / (g_norm * previous_norm);
            const double sigmoid = 1.0 / (1.0 + std::exp(agreement / config.time_window));
            time = std::max(0.0, time + 2.0 * sigmoid - 1.0);
        }
        previous = g;
        previous_norm = g_norm;
    }

    trace.gain_numerator = a;
    trace.final_coefficients.assign(transform.coefficients().begin(),
                                    transform.coefficients().end());
    return {std::move(transform), std::move(trace)};
}

void write_trace_csv(std::ostream& out, const OptimizeTrace& trace) {
    out << "iteration,value,gradient_norm,step_size,time,valid_fraction\n";
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const auto& r = trace.iterations[i];
        out << i << ',' << format_double(r.value) << ',' << format_double(r.gradient_norm) << ','
            << format_double(r.step_size) << ',' << format_double(r.time) << ','
            << format_double(r.valid_fraction) << '\n';
    }
}

}  // namespace defreg
