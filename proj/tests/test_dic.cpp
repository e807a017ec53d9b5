#include <doctest.h>

#include <cmath>

#include "defreg/dic.hpp"
#include "defreg/errors.hpp"
#include "defreg/rng.hpp"
#include "support.hpp"

using namespace defreg;

namespace {

// Deformed frame for a rigid shift s: def(x) = ref(x - s).
GrayImage shifted(const SpecklePattern& pattern, int w, int h, double sx, double sy) {
    return test::from_function(w, h, [&](int x, int y) {
        return pattern.value({x - sx, y - sy});
    });
}

DicParams small_params() {
    DicParams p;
    p.search_radius = 8;
    p.step = 6;
    return p;
}

std::size_t valid_seeds(const DicMeasurement& m) {
    std::size_t n = 0;
    for (const auto& s : m.seeds) {
        n += s.valid ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_CASE("parameter checks") {
    DicParams p;
    CHECK_NOTHROW(p.validate());
    p.subset_radius = 0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = {};
    p.step = 0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = {};
    p.search_radius = 0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = {};
    p.strain_radius = -1.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = {};
    p.min_correlation = 1.5;
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("identical frames give exactly zero at every accepted seed") {
    const auto img = test::speckle(80, 70, 2);
    const auto m = dic_measure(img, img, small_params());
    REQUIRE(valid_seeds(m) > 20);
    for (const auto& s : m.seeds) {
        if (s.valid) {
            CHECK(s.u == 0.0);
            CHECK(s.v == 0.0);
            CHECK(s.correlation == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("only seed pixels carry measurements") {
    const auto img = test::speckle(80, 70, 2);
    const auto m = dic_measure(img, img, small_params());
    std::size_t valid = 0;
    for (const auto& s : m.seeds) {
        if (s.valid) {
            CHECK(m.field.valid[m.field.index(s.x, s.y)]);
            ++valid;
        }
    }
    CHECK(m.field.valid_count() == valid);
}

TEST_CASE("integer shift is found exactly") {
    const auto pattern = test::speckle_pattern(90, 80, 3);
    const auto ref = pattern.render(90, 80);
    const auto def = shifted(pattern, 90, 80, 5.0, -3.0);
    const auto m = dic_measure(ref, def, small_params());
    REQUIRE(valid_seeds(m) > 10);
    for (const auto& s : m.seeds) {
        if (s.valid) {
            CHECK(s.peak_dx == 5);
            CHECK(s.peak_dy == -3);
            CHECK(std::abs(s.u - 5.0) < 1e-9);
            CHECK(std::abs(s.v + 3.0) < 1e-9);
        }
    }
}

TEST_CASE("shifts as large as the search radius are exact") {
    const auto pattern = test::speckle_pattern(90, 80, 6);
    const auto m = dic_measure(pattern.render(90, 80), shifted(pattern, 90, 80, -8.0, 8.0),
                               small_params());
    std::size_t checked = 0;
    for (const auto& s : m.seeds) {
        // Seeds whose true match lies outside the frame cannot be found.
        const bool interior = s.x - 8 - 10 >= 0 && s.y + 8 + 10 < 80;
        if (s.valid && interior) {
            CHECK(s.u == -8.0);
            CHECK(s.v == 8.0);
            ++checked;
        }
    }
    CHECK(checked > 5);
}

TEST_CASE("half-pixel shift is resolved") {
    const auto pattern = test::speckle_pattern(90, 80, 4);
    const auto ref = pattern.render(90, 80);
    const auto def = shifted(pattern, 90, 80, 0.5, 0.0);
    const auto m = dic_measure(ref, def, small_params());
    REQUIRE(valid_seeds(m) > 10);
    double transverse = 0.0;
    for (const auto& s : m.seeds) {
        if (s.valid) {
            CHECK(std::abs(s.u - 0.5) < 0.1);
            transverse += std::abs(s.v);
        }
    }
    // The 3x3 fit leaks some error into the unshifted axis on a few subsets.
    CHECK(transverse / static_cast<double>(valid_seeds(m)) < 0.05);
}

TEST_CASE("matching ignores affine intensity changes") {
    const auto pattern = test::speckle_pattern(90, 80, 5);
    const auto ref = pattern.render(90, 80);
    const auto def = shifted(pattern, 90, 80, 1.3, 2.6);
    const auto dimmed = test::from_function(90, 80, [&](int x, int y) {
        return 0.7 * def.at(x, y) + 0.1;
    });
    const auto a = dic_measure(ref, def, small_params());
    const auto b = dic_measure(ref, dimmed, small_params());
    REQUIRE(a.seeds.size() == b.seeds.size());
    for (std::size_t i = 0; i < a.seeds.size(); ++i) {
        CHECK(a.seeds[i].valid == b.seeds[i].valid);
        CHECK(a.seeds[i].peak_dx == b.seeds[i].peak_dx);
        CHECK(a.seeds[i].peak_dy == b.seeds[i].peak_dy);
        if (a.seeds[i].valid) {
            CHECK(std::abs(a.seeds[i].u - b.seeds[i].u) < 1e-9);
            CHECK(std::abs(a.seeds[i].v - b.seeds[i].v) < 1e-9);
        }
    }
}

TEST_CASE("textureless frames have nothing to match") {
    const auto flat = test::from_function(60, 60, [](int, int) { return 0.5; });
    CHECK_THROWS_AS(dic_measure(flat, flat, small_params()), EmptyResultError);
    // Subsets larger than the frame leave no seeds at all.
    DicParams p = small_params();
    p.subset_radius = 40;
    const auto img = test::speckle(60, 60);
    CHECK_THROWS_AS(dic_measure(img, img, p), EmptyResultError);
}

TEST_CASE("masked pixels of the deformed frame are never matched") {
    const auto img = test::speckle(80, 70, 2);
    std::vector<std::uint8_t> mask(80 * 70, 1);
    for (int y = 0; y < 70; ++y) {
        for (int x = 40; x < 80; ++x) {
            mask[y * 80 + x] = 0;
        }
    }
    const auto m = dic_measure(img, img.with_mask(mask), small_params());
    int clear = 0;
    for (const auto& s : m.seeds) {
        if (s.x + 10 < 40) {
            ++clear;
            CHECK(s.valid);
            CHECK(s.u == 0.0);
        } else {
            // The true match touches masked pixels.
            CHECK(s.correlation < 0.999);
        }
    }
    CHECK(clear > 5);
}

TEST_CASE("mismatched frame sizes are rejected") {
    CHECK_THROWS_AS(dic_measure(test::speckle(60, 60), test::speckle(60, 61), small_params()),
                    ParameterError);
}

TEST_CASE("strain from a uniform field is zero") {
    DisplacementField f(40, 30);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.u[i] = 1.7;
        f.v[i] = -0.4;
    }
    const auto e = dic_strain(f, 5.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
        REQUIRE(e.valid[i]);
        CHECK(std::abs(e.exx[i]) < 1e-12);
        CHECK(std::abs(e.eyy[i]) < 1e-12);
        CHECK(std::abs(e.exy[i]) < 1e-12);
    }
}

TEST_CASE("strain from a linear stretch on a sparse grid") {
    // u = 0.1 x on every fourth pixel: Exx = 0.1 + 0.1^2 / 2.
    DisplacementField f(41, 41);
    for (int y = 0; y < 41; ++y) {
        for (int x = 0; x < 41; ++x) {
            const std::size_t i = f.index(x, y);
            f.u[i] = 0.1 * x;
            f.valid[i] = (x % 4 == 0 && y % 4 == 0) ? 1 : 0;
        }
    }
    const auto e = dic_strain(f, 5.0);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(e.valid[i] == f.valid[i]);
        if (e.valid[i]) {
            CHECK(e.exx[i] == doctest::Approx(0.105).epsilon(1e-12));
            CHECK(std::abs(e.eyy[i]) < 1e-12);
            CHECK(std::abs(e.exy[i]) < 1e-12);
            ++checked;
        }
    }
    CHECK(checked == 121);
}

TEST_CASE("wider strain windows smooth noise") {
    DisplacementField f(60, 60);
    Rng rng(9);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.u[i] = 0.05 * rng.normal();
        f.v[i] = 0.05 * rng.normal();
    }
    const auto narrow = dic_strain(f, 5.0);
    const auto wide = dic_strain(f, 10.0);
    CHECK(std::sqrt(test::variance(wide.exx)) < std::sqrt(test::variance(narrow.exx)));
}

TEST_CASE("isolated samples have no strain") {
    DisplacementField f(30, 30);
    std::fill(f.valid.begin(), f.valid.end(), 0);
    f.valid[f.index(5, 5)] = 1;
    f.valid[f.index(20, 20)] = 1;
    const auto e = dic_strain(f, 5.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK_FALSE(e.valid[i]);
    }
}
