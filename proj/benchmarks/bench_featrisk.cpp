#include "featrisk/featrisk.hpp"

#include <benchmark/benchmark.h>

using namespace featrisk;

namespace {

Vector spectrum(int h) {
    Rng rng = make_stream(1, StreamDomain::test);
    Vector t(h);
    for (int i = 0; i < h; ++i) t(i) = std::exp(rng.uniform(-4.0, 4.0));
    return t;
}

ProblemInstance instance(int p, int q) {
    Rng cr = make_stream(2, StreamDomain::covariance);
    CovarianceModel sigma = make_covariance(WishartJitterSpec{p, p, 0.005}, &cr);
    Rng tr = make_stream(2, StreamDomain::ground_truth);
    GroundTruthRepresentation truth = sample_ground_truth(p, q, make_covariance(Ar1Spec{p, 0.5}), tr);
    return make_instance(std::move(sigma), std::move(truth), {Matrix::Identity(q, q), 1.0, 1.0, 10.0}, 2);
}

}  // namespace

static void BM_SolveB0(benchmark::State& state) {
    const int h = static_cast<int>(state.range(0));
    const Vector t = spectrum(h);
    for (auto _ : state) benchmark::DoNotOptimize(solve_b0(t, h / 3));
}
BENCHMARK(BM_SolveB0)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_Whiten(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const ProblemInstance inst = instance(p, p / 3);
    const Penalty pen = build_penalty(Representation(inst.truth.b), {1.0, 0.0, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(whiten(inst.sigma, pen));
}
BENCHMARK(BM_Whiten)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_AveragedObjective(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const ProblemInstance inst = instance(p, p / 3);
    const WhitenedSpectrum ws = whiten(inst.sigma, build_penalty(Representation(inst.truth.b), {1.0, 0.0, 1.0}));
    for (auto _ : state) {
        benchmark::DoNotOptimize(averaged_objective(ws, inst.truth.b, inst.task.sigma_alpha(), 1.0, p / 2));
    }
}
BENCHMARK(BM_AveragedObjective)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

static void BM_ObjectiveGradient(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const ProblemInstance inst = instance(p, p / 2);
    const ObjectiveSetup setup = ObjectiveSetup::from_instance(inst, p / 3, ObjectiveMode::avg);
    const Matrix b = init_representation(p, p, 3);
    const RegularizationParams lam = init_lambda(3);
    for (auto _ : state) benchmark::DoNotOptimize(objective_gradient(setup, b, lam));
}
BENCHMARK(BM_ObjectiveGradient)->Arg(30)->Arg(120)->Unit(benchmark::kMillisecond);

static void BM_FgEstimates(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const ProblemInstance inst = instance(p, p / 3);
    Rng rng = make_stream(4, StreamDomain::task);
    const Vector beta = sample_task(inst, rng).beta;
    const Penalty pen = build_penalty(Representation(inst.truth.b), {1.0, 0.0, 1.0});
    McOptions mo;
    mo.replicates = 20;
    for (auto _ : state) benchmark::DoNotOptimize(fg_estimates(inst, pen, beta, p / 2, mo));
}
BENCHMARK(BM_FgEstimates)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_BiasSpectrum(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const ProblemInstance inst = instance(p, p / 4);
    const SpectrumProblem prob =
        alignment_coefficients(inst.sigma, inst.truth.b, inst.task.sigma_alpha(), {p / 8, 1.0, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(minimize_bias_spectrum(prob));
}
BENCHMARK(BM_BiasSpectrum)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
