#include <doctest.h>

#include <cmath>
#include <sstream>

#include "defreg/errors.hpp"
#include "defreg/parallel.hpp"
#include "defreg/registration.hpp"
#include "defreg/validation.hpp"
#include "support.hpp"

using namespace defreg;

namespace {

struct ErrorStats {
    double rms = 0.0;
    double max_abs = 0.0;
};

// Error of a recovered field against the expected one over pixels at least
// `margin` from the border.
ErrorStats field_error(const DisplacementField& got, const DisplacementField& want, int margin) {
    ErrorStats s;
    double se = 0.0;
    int n = 0;
    for (int y = margin; y < got.height - margin; ++y) {
        for (int x = margin; x < got.width - margin; ++x) {
            const std::size_t i = got.index(x, y);
            const double du = got.u[i] - want.u[i];
            const double dv = got.v[i] - want.v[i];
            se += du * du + dv * dv;
            s.max_abs = std::max({s.max_abs, std::abs(got.u[i]), std::abs(got.v[i])});
            ++n;
        }
    }
    s.rms = std::sqrt(se / n);
    return s;
}

RegistrationConfig quick_config() {
    RegistrationConfig cfg;
    cfg.pyramid_levels = {2, 1, 0};
    cfg.asgd.max_iterations = 300;
    cfg.asgd.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("configuration checks name the offending key") {
    RegistrationConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.spacing = {-30.0, 30.0};
    try {
        cfg.validate();
        FAIL("expected a parameter error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("registration.spacing") != std::string::npos);
    }
    cfg = {};
    cfg.samples = 63;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = {};
    cfg.pyramid_levels = {0, 1};
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.pyramid_levels = {};
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = {};
    cfg.asgd.alpha = 2.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("identity pair stays at zero displacement") {
    const auto img = test::speckle(120, 100, 4);
    RegistrationConfig cfg;
    const auto result = register_pair(img, img, cfg);
    CHECK_FALSE(result.aborted);
    const auto d = displacement_from_transform(result.transform);
    const auto err = field_error(d, DisplacementField(120, 100), 0);
    CHECK(err.max_abs < 0.05);
}

TEST_CASE("translation is recovered as the forward motion") {
    const int w = 128;
    const auto pattern = test::speckle_pattern(w, w, 12);
    const auto pair =
        generate_pair(pattern, w, w, AnalyticField::translation(3.25, -1.5), 0.0, 1);
    const auto result = register_pair(pair.reference, pair.deformed, quick_config());
    // T maps fixed coordinates into the moving frame: T(x) = x + (3.25, -1.5).
    const Vec2 centre = result.transform.transform_point({64.0, 64.0});
    CHECK(centre.x == doctest::Approx(67.25).epsilon(0.001));
    CHECK(centre.y == doctest::Approx(62.5).epsilon(0.001));
    const auto d = displacement_from_transform(result.transform);
    CHECK(field_error(d, pair.truth, 8).rms < 0.05);
}

TEST_CASE("registration rejects mismatched images") {
    CHECK_THROWS_AS(register_pair(test::speckle(40, 40), test::speckle(40, 41), {}),
                    ParameterError);
}

TEST_CASE("resampling with the identity returns the moving image") {
    const auto img = test::speckle(50, 40, 3);
    const auto t = new_transform(50, 40, {15.0, 15.0});
    for (const auto scheme : {Interpolation::cubic_bspline, Interpolation::bilinear}) {
        const auto out = resample_moving(img, t, scheme);
        CHECK(std::equal(img.intensities().begin(), img.intensities().end(),
                         out.intensities().begin()));
    }
}

TEST_CASE("integer shift resampling is exact on the overlap") {
    const auto img = test::speckle(50, 40, 3);
    auto t = new_transform(50, 40, {15.0, 15.0});
    for (int j = 0; j < t.ny(); ++j) {
        for (int i = 0; i < t.nx(); ++i) {
            t.set_coefficient(i, j, {2.0, 0.0});
        }
    }
    const auto out = resample_moving(img, t);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 50; ++x) {
            if (x + 2 < 50) {
                CHECK(out.in_roi(x, y));
                CHECK(std::abs(out.at(x, y) - img.at(x + 2, y)) < 1e-12);
            } else {
                CHECK_FALSE(out.in_roi(x, y));
            }
        }
    }
}

TEST_CASE("registration improves SSIM") {
    const int w = 128;
    const auto pattern = test::speckle_pattern(w, w, 14);
    const auto field = AnalyticField::affine_about({1.04, 0.0, 0.0, 0.98}, {64.0, 64.0});
    const auto pair = generate_pair(pattern, w, w, field, 0.005, 2);
    const auto result = register_pair(pair.reference, pair.deformed, quick_config());
    const auto warped = resample_moving(pair.deformed, result.transform);
    const double before = ssim(pair.reference, pair.deformed).mean;
    const double after = ssim(pair.reference, warped, warped.mask()).mean;
    CHECK(after > before);
    CHECK(after > 0.9);
}

TEST_CASE("two-frame sequence is a single registration") {
    const int w = 96;
    const auto pattern = test::speckle_pattern(w, w, 2);
    const auto pair = generate_pair(pattern, w, w, AnalyticField::translation(0.6, 0.3), 0.0, 1);
    const std::vector<GrayImage> images{pair.reference, pair.deformed};
    auto cfg = quick_config();
    const auto seq = register_sequence(images, cfg);
    REQUIRE(seq.steps.size() == 1);
    auto step_cfg = cfg;
    step_cfg.asgd.seed = mix_seed(cfg.asgd.seed, std::uint64_t{0});
    const auto single = register_pair(pair.reference, pair.deformed, step_cfg);
    CHECK(std::equal(single.transform.coefficients().begin(), single.transform.coefficients().end(),
                     seq.steps[0].transform.coefficients().begin()));
    const auto d = displacement_from_transform(single.transform);
    const auto& c = seq.steps[0].cumulative;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (c.valid[i]) {
            REQUIRE(std::abs(d.u[i] - c.u[i]) < 1e-9);
            REQUIRE(std::abs(d.v[i] - c.v[i]) < 1e-9);
        }
    }
}

TEST_CASE("translation steps compose") {
    const int w = 96;
    const auto pattern = test::speckle_pattern(w, w, 5);
    const std::vector<AnalyticField> cumulative{AnalyticField::translation(1.0, 0.0),
                                                AnalyticField::translation(1.0, 1.0)};
    const auto seq = generate_sequence(pattern, w, w, cumulative, 0.0, 4);
    const auto result = register_sequence(seq.frames, quick_config());
    REQUIRE(result.steps.size() == 2);
    const auto& final_field = cumulative_displacement(result, 1);
    CHECK(final_field.width == w);
    CHECK(final_field.height == w);
    CHECK(field_error(final_field, seq.truths[1], 8).rms < 0.07);
    CHECK_THROWS_AS(cumulative_displacement(result, 2), std::out_of_range);
}

TEST_CASE("identical frames do not accumulate displacement") {
    const auto img = test::speckle(96, 80, 7);
    const std::vector<GrayImage> frames(5, img);
    const auto result = register_sequence(frames, RegistrationConfig{});
    REQUIRE(result.steps.size() == 4);
    const DisplacementField zero(96, 80);
    const double first = field_error(result.steps[0].cumulative, zero, 0).max_abs;
    for (std::size_t k = 0; k < 4; ++k) {
        const double m = field_error(result.steps[k].cumulative, zero, 0).max_abs;
        CHECK(m < 0.1);
        CHECK(m <= 2.0 * static_cast<double>(k + 1) * first + 0.05);
        CHECK(std::isfinite(result.steps[k].ssim_mean));
    }
    std::ostringstream report;
    write_sequence_report(report, result);
    CHECK(report.str().find("ssim") != std::string::npos);
}

TEST_CASE("points that leave the domain stay invalid") {
    const int w = 96;
    const auto pattern = test::speckle_pattern(w, w, 8);
    const std::vector<AnalyticField> cumulative{AnalyticField::translation(2.0, 0.0),
                                                AnalyticField::translation(4.0, 0.0),
                                                AnalyticField::translation(6.0, 0.0)};
    const auto seq = generate_sequence(pattern, w, w, cumulative, 0.0, 4);
    const auto result = register_sequence(seq.frames, quick_config());
    REQUIRE(result.steps.size() == 3);
    std::size_t previous_invalid = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& f = result.steps[k].cumulative;
        std::size_t invalid = 0;
        for (int y = 0; y < w; ++y) {
            CHECK(f.valid[f.index(0, y)]);  // left edge moves inward
            if (!f.valid[f.index(w - 1, y)]) {
                ++invalid;
            }
        }
        CHECK(invalid >= previous_invalid);
        previous_invalid = invalid;
        if (k > 0) {
            const auto& before = result.steps[k - 1].cumulative;
            for (std::size_t i = 0; i < f.size(); ++i) {
                if (!before.valid[i]) {
                    CHECK_FALSE(f.valid[i]);
                }
            }
        }
    }
    CHECK(previous_invalid > 0);
}

TEST_CASE("results are bit-identical across runs and worker counts") {
    const int w = 96;
    const auto pattern = test::speckle_pattern(w, w, 3);
    const auto pair = generate_pair(pattern, w, w, AnalyticField::translation(0.4, 0.2), 0.005, 1);
    const std::vector<GrayImage> images{pair.reference, pair.deformed};
    auto cfg = quick_config();
    cfg.asgd.max_iterations = 100;
    set_max_threads(1);
    const auto a = register_sequence(images, cfg);
    const auto b = register_sequence(images, cfg);
    set_max_threads(3);
    const auto c = register_sequence(images, cfg);
    set_max_threads(1);
    for (const auto* r : {&b, &c}) {
        CHECK(std::equal(a.steps[0].transform.coefficients().begin(),
                         a.steps[0].transform.coefficients().end(),
                         r->steps[0].transform.coefficients().begin()));
        CHECK(a.steps[0].cumulative.u == r->steps[0].cumulative.u);
        CHECK(a.steps[0].ssim_mean == r->steps[0].ssim_mean);
    }
}
