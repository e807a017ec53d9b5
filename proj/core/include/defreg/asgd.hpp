#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "defreg/bspline_transform.hpp"
#include "defreg/metrics.hpp"

namespace defreg {

// Adaptive stochastic gradient descent: gain a / (A + t)^alpha where the
// effective time t advances when successive gradients disagree.
struct AsgdConfig {
    int max_iterations = 500;
    std::optional<double> a;  // estimated from the first gradient when empty
    double A = 20.0;
    double alpha = 0.602;
    double time_window = 0.1;
    std::uint64_t seed = 0;
    // Largest control-point step of the first iteration when a is estimated,
    // in transform (full-resolution) pixels.
    double initial_step = 1.0;

    // Throws ParameterError naming the offending field.
    void validate() const;
};

struct IterationRecord {
    double value = 0.0;
    double gradient_norm = 0.0;
    double step_size = 0.0;
    double time = 0.0;
    double valid_fraction = 0.0;
};

struct OptimizeTrace {
    std::vector<IterationRecord> iterations;
    std::vector<double> final_coefficients;
    double gain_numerator = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

// Called once per iteration with the current transform and that iteration's
// sample seed; throws DegenerateOverlapError to abort.
using MetricEvaluator = std::function<MetricReport(const BSplineTransform&, std::uint64_t)>;

// Runs exactly max_iterations steps unless the evaluator aborts, in which
// case the last valid iterate is returned and the trace is flagged.
std::pair<BSplineTransform, OptimizeTrace> optimize(const MetricEvaluator& evaluate,
                                                    BSplineTransform initial,
                                                    const AsgdConfig& config);

// CSV columns: iteration,value,gradient_norm,step_size,time,valid_fraction
void write_trace_csv(std::ostream& out, const OptimizeTrace& trace);

}  // namespace defreg
