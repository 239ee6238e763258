#include <benchmark/benchmark.h>

#include <random>

#include "aaa/bayes_engine.hpp"
#include "aaa/decision_engine.hpp"
#include "aaa/trial_state.hpp"

using namespace aaa;

namespace {

const std::vector<double> kRawA = {0.1, 0.3, 0.6, 0.9};
const std::vector<double> kRawB = {0.1, 0.35, 0.65, 0.95};

DoseDataTable diagonal_data() {
  const DoseGrid g = DoseGrid::standardize(kRawA, kRawB);
  DoseDataTable d;
  d.add(g.point(0, 0), 0, 1, 3);
  d.add(g.point(1, 1), 0, 1, 3);
  d.add(g.point(2, 2), 1, 2, 6);
  d.add(g.point(2, 1), 0, 2, 3);
  d.add(g.point(3, 3), 2, 2, 3);
  return d;
}

McmcConfig fast_cfg() {
  McmcConfig c = McmcConfig::fast();
  c.seed = 11;
  return c;
}

void BM_Calibrate(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(calibrate_eta(CalibrationSpec{}));
}
BENCHMARK(BM_Calibrate);

void BM_LogLikelihood(benchmark::State& st) {
  const DoseDataTable d = diagonal_data();
  const ToxicityParams t{-1.0, 1.2, 0.8};
  const EfficacyParams e{ModelId::M4, 0.4, 0.5, 0.3, -1.0, -1.2};
  for (auto _ : st) benchmark::DoNotOptimize(log_likelihood(d, t, e));
}
BENCHMARK(BM_LogLikelihood);

void BM_SamplePosteriorM4(benchmark::State& st) {
  const DoseDataTable d = diagonal_data();
  for (auto _ : st) benchmark::DoNotOptimize(sample_posterior(d, ModelId::M4, {}, fast_cfg()));
}
BENCHMARK(BM_SamplePosteriorM4)->Unit(benchmark::kMillisecond);

void BM_FitModels(benchmark::State& st) {
  const DoseDataTable d = diagonal_data();
  for (auto _ : st) benchmark::DoNotOptimize(fit_models(d, {}, fast_cfg(), 5, false));
}
BENCHMARK(BM_FitModels)->Unit(benchmark::kMillisecond);

void BM_DrawArgmax(benchmark::State& st) {
  const DoseGrid g = DoseGrid::standardize(kRawA, kRawB);
  const SearchRegion region = SearchRegion::for_grid(g);
  const UtilityParams u = calibrate_eta(CalibrationSpec{});
  const ToxicityParams t{-1.5, 1.2, 0.9};
  const EfficacyParams e{ModelId::M4, 0.6, 0.4, 0.2, -1.5, -1.1};
  for (auto _ : st) benchmark::DoNotOptimize(draw_argmax(t, e, u, region));
}
BENCHMARK(BM_DrawArgmax)->Unit(benchmark::kMicrosecond);

void BM_EstimateBodc(benchmark::State& st) {
  const DoseDataTable d = diagonal_data();
  const Chain chain = sample_posterior(d, ModelId::M4, {}, fast_cfg());
  const DoseGrid g = DoseGrid::standardize(kRawA, kRawB);
  const UtilityParams u = calibrate_eta(CalibrationSpec{});
  for (auto _ : st) benchmark::DoNotOptimize(estimate_bodc(chain, u, SearchRegion::for_grid(g)));
}
BENCHMARK(BM_EstimateBodc)->Unit(benchmark::kMillisecond);

void BM_RunEpoch(benchmark::State& st) {
  TrialConfig cfg = make_trial_config(kRawA, kRawB, DesignConfig{}, CalibrationSpec{});
  cfg.seed = 3;
  TrialState s;
  append_event(s, 0.0, TrialCreated{cfg});
  const DosePair x0 = s.grid.point(0, 0);
  append_event(s, 0.0, CohortOpened{1, x0, 3});
  append_event(s, 0.0, OutcomesRecorded{1, x0, 0, 1, 3});
  for (auto _ : st) benchmark::DoNotOptimize(run_epoch(s, 1, x0));
}
BENCHMARK(BM_RunEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
