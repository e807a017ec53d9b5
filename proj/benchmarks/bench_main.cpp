#include <benchmark/benchmark.h>

#include <vector>

#include "defreg/bspline_transform.hpp"
#include "defreg/dic.hpp"
#include "defreg/image.hpp"
#include "defreg/metrics.hpp"
#include "defreg/parallel.hpp"
#include "defreg/registration.hpp"
#include "defreg/synthetic.hpp"

using namespace defreg;

namespace {

SyntheticPair stretched_pair(int size) {
    SpeckleParams params;
    params.seed = 7;
    const SpecklePattern pattern(size, size, params);
    const auto motion =
        AnalyticField::affine_about({1.05, 0.0, 0.0, 1.0}, {size / 2.0, size / 2.0});
    return generate_pair(pattern, size, size, motion, 0.005, 11);
}

void BM_Interpolate(benchmark::State& state) {
    const auto pair = stretched_pair(256);
    const auto scheme = static_cast<Interpolation>(state.range(0));
    double x = 10.25;
    for (auto _ : state) {
        benchmark::DoNotOptimize(interpolate(pair.reference, {x, 100.6}, scheme));
        x = x > 240.0 ? 10.25 : x + 0.37;
    }
}
BENCHMARK(BM_Interpolate)
    ->Arg(static_cast<int>(Interpolation::bilinear))
    ->Arg(static_cast<int>(Interpolation::cubic_bspline));

void BM_MetricGradient(benchmark::State& state) {
    set_max_threads(1);
    const auto pair = stretched_pair(256);
    const auto kind = static_cast<MetricKind>(state.range(0));
    const auto transform = new_transform(256, 256, {30.0, 30.0});
    const SampleSet samples = draw_samples(pair.reference, 2048, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            metric_value_and_gradient(kind, pair.reference, pair.deformed, transform, samples));
    }
}
BENCHMARK(BM_MetricGradient)
    ->Arg(static_cast<int>(MetricKind::ssd))
    ->Arg(static_cast<int>(MetricKind::ncc))
    ->Arg(static_cast<int>(MetricKind::mi));

void BM_RegisterPair(benchmark::State& state) {
    set_max_threads(1);
    const int size = static_cast<int>(state.range(0));
    const auto pair = stretched_pair(size);
    RegistrationConfig config;
    config.pyramid_levels = {2, 1, 0};
    config.asgd.max_iterations = 200;
    for (auto _ : state) {
        benchmark::DoNotOptimize(register_pair(pair.reference, pair.deformed, config));
    }
}
BENCHMARK(BM_RegisterPair)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Dic(benchmark::State& state) {
    set_max_threads(1);
    const auto pair = stretched_pair(128);
    DicParams params;
    params.search_radius = 10;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dic_measure(pair.reference, pair.deformed, params));
    }
}
BENCHMARK(BM_Dic)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
