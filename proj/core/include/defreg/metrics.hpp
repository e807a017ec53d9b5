#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "defreg/bspline_transform.hpp"
#include "defreg/image.hpp"

namespace defreg {

enum class MetricKind { ssd, ncc, mi };

MetricKind parse_metric_kind(std::string_view name);
std::string_view to_string(MetricKind kind);

struct SampleSet {
    std::vector<Vec2> points;
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

// Uniform draws over ROI pixel centres with +-0.5 px jitter per axis,
// with replacement. Precomputes the ROI pixel list once per image.
class RandomSampler {
public:
    explicit RandomSampler(const GrayImage& fixed);

    SampleSet draw(std::size_t n, std::uint64_t seed) const;
    std::size_t roi_size() const { return roi_.size(); }

private:
    int width_;
    std::vector<std::uint32_t> roi_;
};

// Throws ConfigError for an empty ROI or n == 0.
SampleSet draw_samples(const GrayImage& fixed, std::size_t n, std::uint64_t seed);

// Lower is better for every kind.
struct MetricReport {
    double value = 0.0;
    std::vector<double> gradient;
    double valid_fraction = 0.0;
};

struct MetricOptions {
    // Sample coordinates are image coordinates divided by this factor
    // (pyramid levels): the transform always lives in full-resolution pixels.
    double coordinate_scale = 1.0;
    int histogram_bins = 32;
};

// Value and analytic gradient with respect to every transform coefficient.
// Samples whose transformed position leaves the moving image are dropped;
// valid_fraction <= 0.5 throws DegenerateOverlapError.
MetricReport metric_value_and_gradient(MetricKind kind, const GrayImage& fixed,
                                       const GrayImage& moving, const BSplineTransform& transform,
                                       const SampleSet& samples, const MetricOptions& options = {});

}  // namespace defreg
