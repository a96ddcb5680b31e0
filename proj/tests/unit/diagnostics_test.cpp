#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "nonrev/diagnostics.hpp"
#include "nonrev/errors.hpp"
#include "nonrev/ou_exact.hpp"
#include "oracles.hpp"

using namespace nonrev;

namespace {

Mat diag2(double a, double b) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = a;
  d(1, 1) = b;
  return d;
}

ReferenceDensity uniform01(double hi = 1.0) {
  return {[hi](const Vec& x) { return x[0] >= 0.0 && x[0] < hi ? 1.0 / hi : 0.0; }, "uniform"};
}

BinSpec bins1(double lo, double hi, int n) { return BinSpec{{BinAxis{lo, hi, n}}}; }

Mat normal_draws(int n, int dim, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Mat x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) x(i, k) = normal(rng) + shift;
  return x;
}

TVCurve synthetic(std::function<double(double)> tv) {
  TVCurve c;
  for (int i = 1; i <= 10; ++i) {
    c.times.push_back(0.1 * i);
    c.tv.push_back(tv(0.1 * i));
  }
  return c;
}

}  // namespace

TEST(TV, MatchingHistogramIsZero) {
  Mat x(8, 1);
  x << 0.1, 0.3, 0.6, 0.9, 0.2, 0.4, 0.7, 0.8;
  const auto bins = bins1(0, 1, 4);
  EXPECT_EQ(tv_distance(x, bin_masses(uniform01(), bins), bins), 0.0);
}

TEST(TV, DisjointSupportIsOne) {
  const Mat x = Mat::Constant(10, 1, 0.75);
  const auto bins = bins1(0, 1, 2);
  EXPECT_DOUBLE_EQ(tv_distance(x, bin_masses(uniform01(0.5), bins), bins), 1.0);
}

TEST(TV, OverflowCellCounts) {
  Mat x = Mat::Constant(10, 1, 0.5);
  x(0, 0) = 7.0;
  const auto bins = bins1(0, 1, 2);
  // reference puts nothing outside; one sample in ten does
  EXPECT_NEAR(tv_distance(x, bin_masses(uniform01(), bins), bins), 0.5, 1e-15);
}

TEST(TV, ShiftedNormalErfOracle) {
  const Mat x = normal_draws(100000, 1, 1.0, 7);
  const auto bins = bins1(-6, 7, 80);
  const auto masses = bin_masses(ReferenceDensity::gaussian(Mat::Identity(1, 1)), bins);
  EXPECT_NEAR(tv_distance(x, masses, bins), oracle::shifted_normal_tv(1.0), 0.02);
  EXPECT_NEAR(oracle::shifted_normal_tv(1.0), 0.3829, 1e-4);
}

TEST(TV, BinMassesOfGaussian) {
  const auto bins = gaussian_bins(Mat::Identity(1, 1), 64);
  const auto m = bin_masses(ReferenceDensity::gaussian(Mat::Identity(1, 1)), bins);
  const double h = 12.0 / 64;
  for (int b : {0, 20, 31, 32, 50}) {
    const double lo = -6.0 + b * h;
    EXPECT_NEAR(m[static_cast<std::size_t>(b)], oracle::normal_cdf(lo + h) - oracle::normal_cdf(lo), 1e-5);
  }
  EXPECT_NEAR(std::accumulate(m.begin(), m.end(), 0.0), 1.0, 1e-8);
}

TEST(TV, InvariantUnderChainRelabeling) {
  Mat x = normal_draws(5000, 2, 0.3, 8);
  const Mat cov = stationary_covariance(diag2(-1, -4));
  const auto bins = gaussian_bins(cov, 16);
  const auto masses = bin_masses(ReferenceDensity::gaussian(cov), bins);
  const double before = tv_distance(x, masses, bins);
  std::vector<int> perm(5000);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  Mat y(5000, 2);
  for (int i = 0; i < 5000; ++i) y.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(tv_distance(y, masses, bins), before, 1e-14);
}

TEST(TV, InvariantUnderBinEnumeration) {
  // swapping the axes of samples, bins and reference reorders every bin
  const Mat x = normal_draws(5000, 2, 0.2, 10);
  const Mat cov = stationary_covariance(diag2(-1, -4));
  const auto bins = gaussian_bins(cov, 12);
  const double tv = tv_distance(x, bin_masses(ReferenceDensity::gaussian(cov), bins), bins);

  Mat xs(5000, 2);
  xs.col(0) = x.col(1);
  xs.col(1) = x.col(0);
  const Mat covs = stationary_covariance(diag2(-4, -1));
  const BinSpec swapped{{bins.axes[1], bins.axes[0]}};
  EXPECT_NEAR(tv_distance(xs, bin_masses(ReferenceDensity::gaussian(covs), swapped), swapped), tv, 1e-14);
}

TEST(TV, SplitHalfBelowBinomialFloor) {
  const Mat cov = Mat::Identity(1, 1);
  const auto bins = gaussian_bins(cov, 64);
  const auto masses = bin_masses(ReferenceDensity::gaussian(cov), bins);
  const int n = 20000;  // per half
  double floor = 0.0;
  for (double m : masses) floor += 0.5 * std::sqrt(2.0 / M_PI) * std::sqrt(2.0 * m * (1.0 - m) / n);
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    EXPECT_LT(split_half_tv(normal_draws(2 * n, 1, 0.0, 100 + seed), bins), 2.0 * floor);
}

TEST(EstimateTV, CurveShapeAndErrors) {
  SampleBatch batch;
  batch.times = {0.0, 1.0};
  batch.snapshots = {normal_draws(4000, 1, 2.0, 1), normal_draws(4000, 1, 0.0, 2)};
  const auto ref = ReferenceDensity::gaussian(Mat::Identity(1, 1));
  const auto curve = estimate_tv(batch, ref, bins1(-6, 6, 16));
  ASSERT_EQ(curve.tv.size(), 2u);
  EXPECT_GT(curve.tv[0], curve.tv[1]);
  for (double v : curve.tv) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GT(curve.noise_floor, 0.0);
  EXPECT_EQ(curve.n_chains, 4000);
  EXPECT_TRUE(curve.warnings.empty());

  EXPECT_THROW(estimate_tv(SampleBatch{}, ref, bins1(-6, 6, 16)), InvalidArgument);
  EXPECT_THROW(estimate_tv(batch, ref, bins1(-1, 1, 16)), InvalidArgument);
  batch.snapshots = {normal_draws(50, 1, 0.0, 3), normal_draws(50, 1, 0.0, 4)};
  EXPECT_FALSE(estimate_tv(batch, ref, bins1(-6, 6, 16)).warnings.empty());
}

TEST(FitRate, ExactExponential) {
  const auto fit = fit_rate(synthetic([](double t) { return 2.0 * std::exp(-3.0 * t); }), 0.0);
  EXPECT_NEAR(fit.rate, -3.0, 1e-12);
  EXPECT_NEAR(fit.prefactor, 2.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(FitRate, MultiplicativeNoiseCalibration) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> noise(0.95, 1.05);
  for (int rep = 0; rep < 100; ++rep) {
    const auto fit = fit_rate(synthetic([&](double t) { return 2.0 * std::exp(-3.0 * t) * noise(rng); }), 0.0);
    EXPECT_GE(fit.rate, -3.3);
    EXPECT_LE(fit.rate, -2.7);
  }
}

TEST(FitRate, Flat) {
  const auto fit = fit_rate(synthetic([](double) { return 0.5; }), 0.0);
  EXPECT_EQ(fit.rate, 0.0);
  EXPECT_NEAR(fit.r_squared, 0.0, 1e-12);
}

TEST(FitRate, ScaleEquivariant) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> noise(0.9, 1.1);
  auto curve = synthetic([&](double t) { return 0.3 * std::exp(-2.0 * t) * noise(rng); });
  const auto a = fit_rate(curve, 0.0);
  for (auto& v : curve.tv) v *= 1.7;
  const auto b = fit_rate(curve, 0.0);
  EXPECT_NEAR(b.rate, a.rate, 1e-12);
  EXPECT_NEAR(b.prefactor, 1.7 * a.prefactor, 1e-12);
}

TEST(FitRate, WindowAndErrors) {
  const auto curve = synthetic([](double t) { return 2.0 * std::exp(-3.0 * t); });
  const auto fit = fit_rate(curve, 0.2);
  // 2 e^{-3t} < 0.9 from t = 0.3 on and > 0.2 until t = 0.7
  EXPECT_DOUBLE_EQ(fit.t_lo, 0.3);
  EXPECT_DOUBLE_EQ(fit.t_hi, 0.7);
  EXPECT_EQ(fit.n_points, 5);
  EXPECT_THROW(fit_rate(curve, 0.5), FitError);
}

TEST(FitRate, ConfidenceIntervalCoverage) {
  // slope CI from the t distribution should cover the truth ~95% of the time
  std::mt19937_64 rng(14);
  std::normal_distribution<double> normal(0.0, 0.05);
  int covered = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    const auto fit = fit_rate(synthetic([&](double t) { return 0.5 * std::exp(-1.5 * t + normal(rng)); }), 0.0);
    if (std::abs(fit.rate + 1.5) <= fit.ci_half_width) ++covered;
  }
  EXPECT_NEAR(covered / static_cast<double>(reps), 0.95, 0.04);
}

TEST(Autocorrelation, Iid) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto series = oracle::ar1_series(0.0, 100000, 200 + seed);
    const auto ac = integrated_autocorrelation(series);
    EXPECT_NEAR(ac.tau_int, 1.0, 0.05);
    EXPECT_NEAR(ac.ess, 100000.0 / ac.tau_int, 1e-6);
  }
}

TEST(Autocorrelation, Ar1) {
  const auto series = oracle::ar1_series(0.9, 1000000, 300);
  const auto ac = integrated_autocorrelation(series);
  EXPECT_NEAR(ac.tau_int, oracle::ar1_tau(0.9), 0.1 * oracle::ar1_tau(0.9));
  EXPECT_GE(ac.window, 6.0 * ac.tau_int - 1.0);
}

TEST(Autocorrelation, Errors) {
  const std::vector<double> constant(500, 2.0);
  EXPECT_THROW(integrated_autocorrelation(constant), InvalidArgument);
  const std::vector<double> tiny(50, 1.0);
  EXPECT_THROW(integrated_autocorrelation(tiny), InvalidArgument);
}

namespace {

IntegratorConfig small_config(Vec x0) {
  IntegratorConfig cfg;
  cfg.step = 2e-3;
  cfg.n_steps = 1500;
  cfg.n_chains = 4000;
  cfg.master_seed = 77;
  cfg.initial = InitialPoint{std::move(x0)};
  for (int i = 1; i <= 30; ++i) cfg.snapshot_times.push_back(0.1 * i);
  return cfg;
}

}  // namespace

TEST(Compare, AnisotropicGaussianGaps) {
  const auto p = potential_gaussian(diag2(-1, -4));
  std::vector<DriftField> drifts{drift_zero(2), drift_skew_grad(SkewMatrix::planar(1.0), p)};
  Vec x0(2);
  x0 << 2.0, 1.0;
  CompareOptions opt;
  opt.bins = gaussian_bins(stationary_covariance(diag2(-1, -4)), 8);
  const auto report = compare(p, drifts, small_config(x0), opt);
  ASSERT_EQ(report.entries.size(), 2u);
  EXPECT_EQ(report.entries[0].gap, -1.0);
  EXPECT_NEAR(report.entries[1].gap, -2.5, 1e-14);
  EXPECT_EQ(report.entries[0].gap_source, "ou_exact");
  EXPECT_NE(report.entries[0].seed, report.entries[1].seed);
  bool saw_gap_flag = false;
  for (const auto& f : report.flags) {
    EXPECT_FALSE(f.provenance.empty());
    if (f.name.rfind("gap_C <= gap_0", 0) == 0) {
      saw_gap_flag = true;
      EXPECT_TRUE(f.holds);
      EXPECT_EQ(f.lhs, report.entries[1].gap);
      EXPECT_EQ(f.rhs, -1.0);
    }
  }
  EXPECT_TRUE(saw_gap_flag);
  // baseline, then two flags per perturbed drift, then rho <= gap for each
  EXPECT_EQ(report.flags.size(), 5u);
}

TEST(Compare, IsotropicEquality) {
  const auto p = potential_gaussian(-Mat::Identity(2, 2));
  std::vector<DriftField> drifts{drift_zero(2), drift_skew_grad(SkewMatrix::planar(1.0), p)};
  Vec x0(2);
  x0 << 2.0, 2.0;
  CompareOptions opt;
  opt.bins = gaussian_bins(Mat::Identity(2, 2), 8);
  const auto report = compare(p, drifts, small_config(x0), opt);
  EXPECT_EQ(report.entries[0].gap, report.entries[1].gap);
  EXPECT_NEAR(report.entries[1].gap, -1.0, 1e-14);
}

TEST(Compare, NeedsZeroBaseline) {
  const auto p = potential_gaussian(-Mat::Identity(2, 2));
  std::vector<DriftField> drifts{drift_skew_grad(SkewMatrix::planar(1.0), p)};
  EXPECT_THROW(compare(p, drifts, small_config(Vec::Zero(2))), InvalidArgument);
  EXPECT_THROW(compare(p, {}, small_config(Vec::Zero(2))), InvalidArgument);
}

TEST(Compare, NonGaussianNeedsGrid) {
  const auto p = potential_double_well(1.0);
  std::vector<DriftField> drifts{drift_zero(1)};
  CompareOptions opt;
  opt.bins = bins1(-3, 3, 32);
  EXPECT_THROW(compare(p, drifts, small_config(Vec::Zero(1)), opt), InvalidArgument);
}
