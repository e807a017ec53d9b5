#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "defreg/config.hpp"
#include "defreg/errors.hpp"

using namespace defreg;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("all sections parse") {
    const auto cfg = parse_config(R"(
# comment line
[registration]
metric = ncc
samples = 4096      ; trailing comment
spacing = 15, 20
pyramid_levels = 2, 1, 0
interpolation = bilinear

[asgd]
max_iterations = 250
a = 3.5
A = 50
alpha = 0.7
time_window = 0.2
initial_step = 0.5
seed = 99

[dic]
subset_radius = 12
step = 3
search_radius = 15
strain_radius = 7.5
min_correlation = 0.6
)");
    const auto& r = cfg.registration;
    CHECK(r.metric == MetricKind::ncc);
    CHECK(r.samples == 4096);
    CHECK(r.spacing.x == 15.0);
    CHECK(r.spacing.y == 20.0);
    CHECK(r.pyramid_levels == std::vector<int>{2, 1, 0});
    CHECK(r.interpolation == Interpolation::bilinear);
    CHECK(r.asgd.max_iterations == 250);
    REQUIRE(r.asgd.a.has_value());
    CHECK(*r.asgd.a == 3.5);
    CHECK(r.asgd.A == 50.0);
    CHECK(r.asgd.alpha == 0.7);
    CHECK(r.asgd.time_window == 0.2);
    CHECK(r.asgd.initial_step == 0.5);
    CHECK(r.asgd.seed == 99);
    CHECK(cfg.dic.subset_radius == 12);
    CHECK(cfg.dic.step == 3);
    CHECK(cfg.dic.search_radius == 15);
    CHECK(cfg.dic.strain_radius == 7.5);
    CHECK(cfg.dic.min_correlation == 0.6);
}

TEST_CASE("missing keys keep the base values") {
    RunConfig base;
    base.registration.samples = 777;
    const auto cfg = parse_config("[registration]\nspacing = 12\n", base);
    CHECK(cfg.registration.samples == 777);
    CHECK(cfg.registration.spacing.x == 12.0);
    CHECK(cfg.registration.spacing.y == 12.0);
    CHECK(parse_config("").dic.subset_radius == DicParams{}.subset_radius);
}

TEST_CASE("a can be reset to automatic") {
    RunConfig base;
    base.registration.asgd.a = 2.0;
    CHECK_FALSE(parse_config("[asgd]\na = auto\n", base).registration.asgd.a.has_value());
}

TEST_CASE("unknown keys and sections are errors") {
    const auto typo = error_of("[registration]\nsamples = 10\nspacnig = 30\n");
    CHECK(typo.find("registration.spacnig") != std::string::npos);
    CHECK(typo.find("line 3") != std::string::npos);
    CHECK(error_of("[optimizer]\n").find("unknown section") != std::string::npos);
    CHECK(error_of("samples = 10\n").find("outside") != std::string::npos);
    CHECK(error_of("[dic]\nstep\n").find("line 2") != std::string::npos);
    CHECK(error_of("[dic\n").find("malformed") != std::string::npos);
}

TEST_CASE("malformed values name the key") {
    CHECK(error_of("[asgd]\nalpha = fast\n").find("asgd.alpha") != std::string::npos);
    CHECK(error_of("[dic]\nstep = 2.5\n").find("dic.step") != std::string::npos);
    CHECK(error_of("[registration]\nspacing = 1, 2, 3\n").find("registration.spacing") !=
          std::string::npos);
    CHECK(error_of("[registration]\nmetric = mse\n").find("registration.metric") !=
          std::string::npos);
    CHECK(error_of("[registration]\ninterpolation = nearest\n").find("interpolation") !=
          std::string::npos);
    CHECK(error_of("[registration]\nsamples =\n").find("missing value") != std::string::npos);
}

TEST_CASE("range checks are left to validation") {
    const auto cfg = parse_config("[registration]\nspacing = -30\n");
    try {
        cfg.registration.validate();
        FAIL("expected a parameter error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("registration.spacing") != std::string::npos);
    }
}

TEST_CASE("rendered configuration parses back to the same entries") {
    RunConfig cfg;
    cfg.registration.metric = MetricKind::ssd;
    cfg.registration.spacing = {12.5, 40.0};
    cfg.registration.pyramid_levels = {3, 1};
    cfg.registration.asgd.a = 0.125;
    cfg.registration.asgd.seed = 1234567;
    cfg.dic.strain_radius = 3.25;
    const auto text = render_config(cfg);
    CHECK(config_entries(parse_config(text)) == config_entries(cfg));
    CHECK(config_entries(parse_config(render_config(RunConfig{}))) == config_entries(RunConfig{}));
    CHECK(config_entries(cfg).size() == 17);
}

TEST_CASE("files load and errors carry the path") {
    const auto dir = std::filesystem::temp_directory_path() / "defreg_test_config";
    std::filesystem::create_directories(dir);
    const auto good = dir / "good.ini";
    std::ofstream(good) << "[dic]\nstep = 8\n";
    CHECK(load_config(good).dic.step == 8);
    const auto bad = dir / "bad.ini";
    std::ofstream(bad) << "[dic]\nstpe = 8\n";
    try {
        load_config(bad);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.ini") != std::string::npos);
        CHECK(std::string(e.what()).find("dic.stpe") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config(dir / "missing.ini"), ConfigError);
    std::filesystem::remove_all(dir);
}
