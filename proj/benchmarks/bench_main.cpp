#include "vibench/oracle.hpp"
#include "vibench/problems.hpp"
#include "vibench/solvers.hpp"

#include <benchmark/benchmark.h>

using namespace vibench;

namespace {

const FiniteSumProblem& game() {
    static const FiniteSumProblem p = [] {
        QuadraticGameSpec q;
        q.n = 100;
        q.d = 30;
        q.seed = 1;
        return generate_quadratic_game(q);
    }();
    return p;
}

}  // namespace

static void BM_SpegStep(benchmark::State& state) {
    const auto& p = game();
    const auto spec = SamplerSpec::minibatch(p.n(), static_cast<std::size_t>(state.range(0)));
    const auto plan = StepSizePlan::fixed(1e-3);
    SolverConfig cfg;
    cfg.iterations = 1000;
    cfg.record_every = 1000;
    const Point x0(Vector::Ones(static_cast<Eigen::Index>(p.dim())));
    for (auto _ : state) {
        benchmark::DoNotOptimize(speg_run(p, spec, plan, x0, cfg).summary.final_sq_dist);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_SpegStep)->Arg(1)->Arg(10)->Arg(100);

static void BM_Draw(benchmark::State& state) {
    Sampler s(SamplerSpec::minibatch(1000, static_cast<std::size_t>(state.range(0))));
    Rng rng(1);
    SamplingVector v;
    for (auto _ : state) {
        s.draw(rng, v);
        benchmark::DoNotOptimize(v.support.data());
    }
}
BENCHMARK(BM_Draw)->Arg(1)->Arg(32)->Arg(500);

static void BM_EnumerateSigma(benchmark::State& state) {
    QuadraticGameSpec q;
    q.n = 12;
    q.d = 4;
    q.seed = 2;
    const auto p = generate_quadratic_game(q);
    const auto spec = SamplerSpec::minibatch(12, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_sigma_star(p, spec));
}
BENCHMARK(BM_EnumerateSigma)->Arg(2)->Arg(6);

static void BM_EvaluateFull(benchmark::State& state) {
    const auto& p = game();
    const Vector x = Vector::Ones(static_cast<Eigen::Index>(p.dim()));
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_full(p, x).data());
}
BENCHMARK(BM_EvaluateFull);

static void BM_MeanOperator(benchmark::State& state) {
    const auto& p = game();
    const Vector x = Vector::Ones(static_cast<Eigen::Index>(p.dim()));
    for (auto _ : state) benchmark::DoNotOptimize(mean_operator(p, x).data());
}
BENCHMARK(BM_MeanOperator);
BENCHMARK_MAIN();
