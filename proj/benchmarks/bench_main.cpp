#include "ivope/envs.hpp"
#include "ivope/estimators.hpp"
#include "ivope/nuisance.hpp"
#include "ivope/oracle.hpp"
#include "ivope/pomdp.hpp"
#include "ivope/qlearn.hpp"
#include "ivope/ratio.hpp"

#include <benchmark/benchmark.h>

using namespace ivope;

namespace {

Dataset toy(int n, int T) { return sample_dataset(EnvSpec::toy_tabular(), n, T, derive_rng_stream(1, "bench", n)); }

Dataset cont(int n, int T) { return sample_dataset(EnvSpec::continuous_2d(), n, T, derive_rng_stream(2, "bench", n)); }

RatioSet ratios_for(const Dataset& d, const TargetPolicy& pi) {
    return build_ratios(fit_cond(d, CondTarget::AGivenZS), fit_cond(d, CondTarget::ZGivenS), pi);
}

}  // namespace

static void BM_SampleToy(benchmark::State& st) {
    const EnvSpec env = EnvSpec::toy_tabular();
    for (auto _ : st) benchmark::DoNotOptimize(sample_dataset(env, static_cast<int>(st.range(0)), 100, derive_rng_stream(1, "s", 0)));
    st.SetItemsProcessed(st.iterations() * st.range(0) * 100);
}
BENCHMARK(BM_SampleToy)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_SampleContinuous(benchmark::State& st) {
    const EnvSpec env = EnvSpec::continuous_2d();
    for (auto _ : st) benchmark::DoNotOptimize(sample_dataset(env, static_cast<int>(st.range(0)), 100, derive_rng_stream(1, "s", 0)));
    st.SetItemsProcessed(st.iterations() * st.range(0) * 100);
}
BENCHMARK(BM_SampleContinuous)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_FitLogistic(benchmark::State& st) {
    const Dataset d = cont(static_cast<int>(st.range(0)), 100);
    for (auto _ : st) benchmark::DoNotOptimize(fit_cond(d, CondTarget::AGivenZS));
}
BENCHMARK(BM_FitLogistic)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_FqeTable(benchmark::State& st) {
    const Dataset d = toy(static_cast<int>(st.range(0)), 100);
    const RatioSet r = ratios_for(d, TargetPolicy::tabular({0.25, 0.5}));
    for (auto _ : st) benchmark::DoNotOptimize(fqe_iv(d, r, 0.9));
}
BENCHMARK(BM_FqeTable)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_FqeInteractions(benchmark::State& st) {
    const EnvSpec env = EnvSpec::continuous_2d();
    const Dataset d = cont(static_cast<int>(st.range(0)), 100);
    const RatioSet r = ratios_for(d, env.default_target());
    for (auto _ : st) benchmark::DoNotOptimize(fqe_iv(d, r, 0.9));
}
BENCHMARK(BM_FqeInteractions)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_FitOmega(benchmark::State& st) {
    const EnvSpec env = EnvSpec::continuous_2d();
    const Dataset d = cont(static_cast<int>(st.range(0)), 100);
    const RatioSet r = ratios_for(d, env.default_target());
    for (auto _ : st) benchmark::DoNotOptimize(fit_omega(d, r, 0.9));
}
BENCHMARK(BM_FitOmega)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_EstimateDr(benchmark::State& st) {
    const Dataset d = toy(static_cast<int>(st.range(0)), 100);
    NuisanceOptions o;
    const NuisanceSet n = fit_nuisances(d, TargetPolicy::tabular({0.25, 0.5}), o);
    for (auto _ : st) benchmark::DoNotOptimize(estimate_dr(d, n));
}
BENCHMARK(BM_EstimateDr)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_FitGq(benchmark::State& st) {
    const Dataset d = toy(500, 100);
    const TargetPolicy pi = TargetPolicy::tabular({0.25, 0.5});
    const RatioSet r = ratios_for(d, pi);
    const HfDataset hf = build_hf_dataset(d, static_cast<int>(st.range(0)), 1, true);
    for (auto _ : st) benchmark::DoNotOptimize(fit_gq(hf, r, 0.9));
}
BENCHMARK(BM_FitGq)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_BruteForceGrouped(benchmark::State& st) {
    const EnvSpec env = EnvSpec::toy_tabular();
    for (auto _ : st)
        benchmark::DoNotOptimize(brute_force_sum(env, env.default_target(), 0.9, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_BruteForceGrouped)->Arg(10)->Arg(200);

static void BM_EtaMc(benchmark::State& st) {
    const EnvSpec env = EnvSpec::toy_tabular();
    for (auto _ : st)
        benchmark::DoNotOptimize(eta_mc(env, env.default_target(), 0.9, st.range(0), 150, derive_rng_stream(3, "mc", 0)));
    st.SetItemsProcessed(st.iterations() * st.range(0) * 150);
}
BENCHMARK(BM_EtaMc)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
