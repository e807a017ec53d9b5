#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "defreg/fields.hpp"
#include "defreg/geometry.hpp"
#include "defreg/image.hpp"
#include "defreg/strain.hpp"

namespace defreg {

struct SpeckleParams {
    double density = 3.0;  // blobs per 100 px^2
    double radius_min = 2.0;
    double radius_max = 4.0;
    std::uint64_t seed = 0;
    // Blobs are scattered this far beyond the image so the pattern stays
    // textured where deformed frames look outside the original window.
    double margin = 32.0;

    void validate() const;
};

// Continuous speckle: Gaussian blobs (standard deviation radius / 2, random
// polarity and amplitude) on a 0.5 background, clamped to [0, 1].
class SpecklePattern {
public:
    SpecklePattern(int width, int height, const SpeckleParams& params);

    double value(Vec2 p) const;
    GrayImage render(int width, int height) const;

private:
    struct Blob {
        Vec2 centre;
        double inv_two_sigma2;
        double amplitude;
        double cutoff2;
    };
    double x0_;
    double y0_;
    double cell_;
    int cells_x_;
    int cells_y_;
    std::vector<std::vector<Blob>> cells_;
};

GrayImage generate_speckle(int width, int height, const SpeckleParams& params);

// Analytic forward motion X -> X + u(X), differentiable everywhere.
class AnalyticField {
public:
    enum class Axis { x, y };

    static AnalyticField translation(double tx, double ty);
    // u(X) = (F - I) X + offset.
    static AnalyticField affine(Mat2 f, Vec2 offset);
    // Affine map that keeps `anchor` fixed.
    static AnalyticField affine_about(Mat2 f, Vec2 anchor);
    // Rotation by theta (radians) about `centre`, then translation.
    static AnalyticField rigid(double theta, Vec2 centre, Vec2 translation);
    // Displacement along `axis` equal to A sin(2 pi X_axis / period).
    static AnalyticField sinusoid(double amplitude, double period, Axis axis);

    Vec2 displacement(Vec2 X) const;
    DisplacementGradient gradient(Vec2 X) const;
    Vec2 forward(Vec2 X) const { return X + displacement(X); }

    // psi(x) with psi(x) + u(psi(x)) = x, by fixed-point iteration to 1e-6 px.
    // Throws GenerationError after 50 iterations without convergence.
    Vec2 inverse(Vec2 x) const;

    // The same motion scaled by s in displacement (affine: I + s (F - I)).
    AnalyticField scaled(double s) const;

    // Throws GenerationError when det(I + grad u) <= 0 anywhere on the domain.
    void check_no_folding(int width, int height) const;

    std::string describe() const;

private:
    struct Affine {
        Mat2 f;
        Vec2 offset;
    };
    struct Sinusoid {
        double amplitude;
        double period;
        Axis axis;
    };
    explicit AnalyticField(std::variant<Affine, Sinusoid> kind) : kind_(kind) {}
    std::variant<Affine, Sinusoid> kind_;
};

DisplacementField sample_field(const AnalyticField& field, int width, int height);
StrainField analytic_strain(const AnalyticField& field, int width, int height);

struct SyntheticPair {
    GrayImage reference;
    GrayImage deformed;
    DisplacementField truth;
};

// Deformed frame by backward mapping through interpolation of `base`:
// I1(x) = I0(psi(x)). Pixels whose psi(x) leaves the base image are clamped
// to its border and masked out of the deformed frame's ROI.
SyntheticPair generate_pair(const GrayImage& base, const AnalyticField& field, double noise_sigma,
                            std::uint64_t seed);

// Same, but evaluates the continuous pattern directly (no interpolation error).
SyntheticPair generate_pair(const SpecklePattern& pattern, int width, int height,
                            const AnalyticField& field, double noise_sigma, std::uint64_t seed);

struct SyntheticSequence {
    std::vector<GrayImage> frames;               // N frames, frame 0 undeformed
    std::vector<DisplacementField> truths;       // N - 1 cumulative fields
};

// cumulative[i] is the motion from frame 0 to frame i + 1.
SyntheticSequence generate_sequence(const SpecklePattern& pattern, int width, int height,
                                    std::span<const AnalyticField> cumulative, double noise_sigma,
                                    std::uint64_t seed);

}  // namespace defreg
