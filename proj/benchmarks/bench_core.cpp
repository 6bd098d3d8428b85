#include <benchmark/benchmark.h>

#include "countssm/dist.hpp"
#include "countssm/estimate.hpp"
#include "countssm/filter.hpp"
#include "countssm/io.hpp"
#include "countssm/regression.hpp"
#include "countssm/simulate.hpp"

using namespace countssm;

namespace {

SynthResult bench_panel(std::size_t n_series) {
  SynthSpec spec;
  spec.n_series = n_series;
  spec.horizon = 6;
  spec.regime = RegimeSpec::increasing(2.0, 0.85);
  spec.eta = Eigen::Vector2d(-0.5, 0.3);
  return synth_panel(spec, 1);
}

}  // namespace

static void BM_NbLogPmf(benchmark::State& state) {
  const NBLaw law(1.7, 0.8);
  std::int64_t y = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nb_log_pmf(y, law));
    y = (y + 1) % 30;
  }
}
BENCHMARK(BM_NbLogPmf);

static void BM_RunFilter(benchmark::State& state) {
  const auto horizon = static_cast<std::size_t>(state.range(0));
  std::vector<Observation> obs;
  for (std::size_t t = 0; t < horizon; ++t) obs.push_back({static_cast<std::int64_t>(t % 3), 1.2});
  const RegimeSpec regime = RegimeSpec::constant_variance(3.0, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(run_filter(obs, regime).loglik);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunFilter)->Arg(6)->Arg(50)->Arg(1000);

static void BM_PanelLoglik(benchmark::State& state) {
  const SynthResult data = bench_panel(static_cast<std::size_t>(state.range(0)));
  const Intensities lambdas = compute_intensities(data.panel, Eigen::Vector2d(-0.5, 0.3));
  const RegimeSpec regime = RegimeSpec::increasing(2.0, 0.85);
  LikelihoodOptions opts;
  opts.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(panel_loglik(data.panel, lambdas, regime, opts));
}
BENCHMARK(BM_PanelLoglik)->Arg(100)->Arg(1000);

static void BM_FitNbGlm(benchmark::State& state) {
  const SynthResult data = bench_panel(static_cast<std::size_t>(state.range(0)));
  const auto rows = design_rows(data.panel);
  for (auto _ : state) benchmark::DoNotOptimize(fit_nb_glm(rows).loglik);
}
BENCHMARK(BM_FitNbGlm)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_SimulatePath(benchmark::State& state) {
  const std::vector<double> one{1.0};
  PathConfig pc;
  pc.regime = RegimeSpec::converging(3.0, 0.8 / 0.9, 0.9);
  pc.horizon = 50;
  pc.intensities = one;
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_path(pc, rng).theta.back());
}
BENCHMARK(BM_SimulatePath);
BENCHMARK_MAIN();
