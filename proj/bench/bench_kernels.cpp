// OpenMP kernels against their serial references.

#include "setid/bench.hpp"
#include "setid/config.hpp"
#include "setid/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace setid;

namespace {

ExperimentConfig ensemble(long K, long R)
{
    Config cfg = reference_preset();
    cfg.set("sim.length", std::to_string(K));
    cfg.set("mc.runs", std::to_string(R));
    cfg.set("mc.save_traces", "0");
    return build_experiment(cfg);
}

void BM_MonteCarloParallel(benchmark::State& state)
{
    const ExperimentConfig cfg = ensemble(state.range(0), 64);
    for (auto _ : state)
        benchmark::DoNotOptimize(monte_carlo(cfg));
    state.SetItemsProcessed(state.iterations() * cfg.runs * cfg.horizon);
}

void BM_MonteCarloSerial(benchmark::State& state)
{
    const ExperimentConfig cfg = ensemble(state.range(0), 64);
    for (auto _ : state)
        benchmark::DoNotOptimize(monte_carlo_serial(cfg));
    state.SetItemsProcessed(state.iterations() * cfg.runs * cfg.horizon);
}

Matrix regressors(long K)
{
    const ExperimentConfig cfg = ensemble(K, 1);
    return simulate_regressors(cfg.system, cfg.input, K);
}

void BM_PeCheckParallel(benchmark::State& state)
{
    const Matrix phi = regressors(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(pe_check(phi, 3));
    state.SetItemsProcessed(state.iterations() * phi.cols());
}

void BM_PeCheckSerial(benchmark::State& state)
{
    const Matrix phi = regressors(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(pe_check_serial(phi, 3));
    state.SetItemsProcessed(state.iterations() * phi.cols());
}

} // namespace

BENCHMARK(BM_MonteCarloParallel)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloSerial)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PeCheckParallel)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PeCheckSerial)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
