#include <random>

#include <benchmark/benchmark.h>

#include "nonrev/diagnostics.hpp"
#include "nonrev/drift.hpp"
#include "nonrev/integrate.hpp"
#include "nonrev/ou_exact.hpp"
#include "nonrev/spectrum.hpp"

using namespace nonrev;

namespace {

Mat planar_d() {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = -1.0;
  d(1, 1) = -4.0;
  return d;
}

void BM_EmStep(benchmark::State& state) {
  const auto p = potential_gaussian(planar_d());
  const auto c = drift_skew_grad(SkewMatrix::planar(1.0), p);
  Vec x = Vec::Ones(2);
  const Vec xi = Vec::Constant(2, 0.1);
  for (auto _ : state) {
    x = em_step(x, p, c, 1e-3, xi);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_EmStep);

void BM_SimulateChains(benchmark::State& state) {
  const auto p = potential_gaussian(planar_d());
  const auto c = drift_skew_grad(SkewMatrix::planar(1.0), p);
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.n_steps = 1000;
  cfg.snapshot_times = {0.5, 1.0};
  cfg.n_chains = static_cast<int>(state.range(0));
  cfg.initial = InitialPoint{Vec::Ones(2)};
  for (auto _ : state) benchmark::DoNotOptimize(simulate_chains(p, c, cfg).snapshots.size());
  state.SetItemsProcessed(state.iterations() * cfg.n_chains * cfg.n_steps);
}
BENCHMARK(BM_SimulateChains)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SpectralGap(benchmark::State& state) {
  const auto p = potential_gaussian(planar_d());
  const auto c = drift_skew_grad(SkewMatrix::planar(1.0), p);
  const int n = static_cast<int>(state.range(0));
  const Grid g = Grid::box2d(-6, 6, n, -3, 3, n);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_gap(discretize_generator(p, c, g)).gap);
}
BENCHMARK(BM_SpectralGap)->Arg(24)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_EstimateTV(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const int n = static_cast<int>(state.range(0));
  SampleBatch batch;
  batch.times = {1.0};
  Mat x(n, 2);
  for (int i = 0; i < n; ++i) x.row(i) << normal(rng), 0.5 * normal(rng);
  batch.snapshots = {x};
  const Mat cov = stationary_covariance(planar_d());
  const auto ref = ReferenceDensity::gaussian(cov);
  const auto bins = gaussian_bins(cov, 32);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_tv(batch, ref, bins).tv.front());
}
BENCHMARK(BM_EstimateTV)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Abscissa(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const int dim = static_cast<int>(state.range(0));
  const Mat b = ou_drift_matrix(random_negative_definite(dim, rng), random_skew(dim, rng));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_abscissa(b));
}
BENCHMARK(BM_Abscissa)->Arg(2)->Arg(4)->Arg(16);

}  // namespace
BENCHMARK_MAIN();
