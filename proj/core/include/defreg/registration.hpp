#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "defreg/asgd.hpp"
#include "defreg/bspline_transform.hpp"
#include "defreg/fields.hpp"
#include "defreg/image.hpp"
#include "defreg/metrics.hpp"

namespace defreg {

struct RegistrationConfig {
    MetricKind metric = MetricKind::mi;
    std::size_t samples = 2048;
    Vec2 spacing{30.0, 30.0};
    std::vector<int> pyramid_levels{0};  // coarse to fine, strictly decreasing
    AsgdConfig asgd;
    Interpolation interpolation = Interpolation::cubic_bspline;

    // Throws ParameterError naming the offending key.
    void validate() const;
};

struct PairResult {
    BSplineTransform transform;
    OptimizeTrace trace;                    // finest level reached
    std::vector<OptimizeTrace> level_traces;  // one per level run
    bool aborted = false;
};

// Finds T with moving(T(x)) ~ fixed(x): T maps fixed-image coordinates into
// the moving image. One transform (in full-resolution pixels) is refined
// across the pyramid levels.
PairResult register_pair(const GrayImage& fixed, const GrayImage& moving,
                         const RegistrationConfig& config);

// output(x) = moving(T(x)); pixels mapping outside the moving image are
// clamped to its border and masked out.
GrayImage resample_moving(const GrayImage& moving, const BSplineTransform& transform,
                          Interpolation scheme = Interpolation::cubic_bspline);

// u(X) = T(X) - X on the pixel grid of the transform's domain.
DisplacementField displacement_from_transform(const BSplineTransform& transform);

struct SequenceStep {
    BSplineTransform transform;   // step i -> step i + 1
    OptimizeTrace trace;
    DisplacementField cumulative;  // frame 0 grid -> frame i + 1
    double ssim_mean = 0.0;        // NaN when no full SSIM window fits
    bool aborted = false;          // this pair's optimization aborted
    bool upstream_abort = false;   // this or an earlier step aborted
};

struct SequenceResult {
    std::vector<SequenceStep> steps;  // N - 1 entries
};

// Incremental scheme: register each consecutive pair (fixed = frame i,
// moving = frame i + 1) and compose the forward step transforms starting from
// the undeformed grid. A tracked point that leaves the image domain is invalid
// from that step on.
SequenceResult register_sequence(std::span<const GrayImage> images,
                                 const RegistrationConfig& config);

// Throws std::out_of_range for step >= N - 1.
const DisplacementField& cumulative_displacement(const SequenceResult& result, std::size_t step);

// One line per step: SSIM mean, abort flags, final metric value.
void write_sequence_report(std::ostream& out, const SequenceResult& result);

}  // namespace defreg
