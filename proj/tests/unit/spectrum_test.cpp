#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nonrev/errors.hpp"
#include "nonrev/ou_exact.hpp"
#include "nonrev/spectrum.hpp"
#include "oracles.hpp"

using namespace nonrev;

namespace {

Mat diag2(double a, double b) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = a;
  d(1, 1) = b;
  return d;
}

Potential ou1d() { return potential_gaussian(-Mat::Identity(1, 1)); }

Vec random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

const double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

TEST(Grid, Validation) {
  EXPECT_THROW(Grid::box1d(-1, 1, 7), InvalidArgument);
  EXPECT_THROW(Grid::box1d(1, -1, 16), InvalidArgument);
  EXPECT_THROW(Grid({GridAxis{0, 1, 300, false}, GridAxis{0, 1, 300, false}}, 40000), InvalidArgument);
  const auto g = Grid::box2d(-1, 1, 9, 0, 4, 10);
  EXPECT_EQ(g.size(), 90);
  EXPECT_DOUBLE_EQ(g.point(g.index(8, 9))[0], 1.0);
  EXPECT_DOUBLE_EQ(g.point(g.index(8, 9))[1], 4.0);
}

TEST(Discretize, ConstantIsInKernel) {
  std::mt19937_64 rng(1);
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto g = discretize_generator(p, drift_skew_grad(random_skew(2, rng), p), Grid::box2d(-6, 6, 40, -3, 3, 40));
  const Vec out = g.apply(Vec::Ones(g.size()));
  EXPECT_LE(out.lpNorm<Eigen::Infinity>(), 1e-10 * g.weighted().coeffs().cwiseAbs().maxCoeff());
}

TEST(Discretize, ConstantIsInKernelForStreamAndUserFields) {
  const auto pt = potential_torus({{1, 0, 0.8}, {0, 1, -0.5}});
  const auto c = drift_stream_2d(stream_sine_products({{1, 1, 2.0}, {2, 1, 0.5, 0.3, 0.0}}), pt);
  const auto gt = discretize_generator(pt, c, Grid::torus2d(24, kTwoPi));
  EXPECT_LE(gt.apply(Vec::Ones(gt.size())).lpNorm<Eigen::Infinity>(), 1e-10);

  const auto pu = potential_torus({});
  const auto gu = discretize_generator(pu, drift_stream_2d(stream_sine_products({{1, 2, 1.5}}), pu),
                                      Grid::torus2d(24, kTwoPi));
  EXPECT_LE(gu.apply(Vec::Ones(gu.size())).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Discretize, ReversibleIsSelfAdjoint) {
  const auto p = potential_double_well_2d(1.0);
  const auto g = discretize_generator(p, drift_zero(2), Grid::box2d(-2.5, 2.5, 30, -6, 6, 30));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vec f = random_vec(g.size(), 2 * s), h = random_vec(g.size(), 2 * s + 1);
    EXPECT_NEAR(g.inner(g.apply(f), h), g.inner(f, g.apply(h)), 1e-10 * (1.0 + std::abs(g.inner(g.apply(f), h))));
  }
}

TEST(Discretize, AdvectionIsSkew) {
  std::mt19937_64 rng(2);
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto g = discretize_generator(p, drift_skew_grad(random_skew(2, rng), p), Grid::box2d(-6, 6, 32, -3, 3, 32));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vec f = random_vec(g.size(), 10 + s);
    EXPECT_LE(std::abs(g.inner(g.apply_advection(f), f)), 1e-10);
  }
}

TEST(Discretize, BoundaryMassCheck) {
  const auto p = potential_gaussian(diag2(-1, -4));
  EXPECT_THROW(discretize_generator(p, drift_zero(2), Grid::box2d(-2, 2, 20, -3, 3, 20)), InvalidArgument);
  EXPECT_NO_THROW(discretize_generator(p, drift_zero(2), Grid::box2d(-6, 6, 20, -3, 3, 20)));
}

TEST(Discretize, DomainMismatch) {
  EXPECT_THROW(discretize_generator(potential_torus({}), drift_zero(2), Grid::box2d(0, 6, 20, 0, 6, 20)),
               InvalidArgument);
  EXPECT_THROW(discretize_generator(ou1d(), drift_zero(1), Grid::torus2d(16, kTwoPi)), InvalidArgument);
}

TEST(Spectrum, HermiteOracle) {
  const auto r = spectral_gap(discretize_generator(ou1d(), drift_zero(1), Grid::box1d(-8, 8, 512)));
  ASSERT_GE(r.eigenvalues.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(r.eigenvalues[static_cast<std::size_t>(k)].real(), -k, 1e-2);
    EXPECT_NEAR(r.eigenvalues[static_cast<std::size_t>(k)].imag(), 0.0, 1e-12);
  }
  EXPECT_NEAR(r.gap, -1.0, 1e-2);
  EXPECT_EQ(r.kernel_dim, 1);
}

TEST(Spectrum, SecondOrderRefinement) {
  double prev = 0.0;
  for (int n : {128, 256, 512}) {
    const double err = std::abs(spectral_gap(discretize_generator(ou1d(), drift_zero(1), Grid::box1d(-8, 8, n))).gap + 1.0);
    if (n > 128) EXPECT_GE(prev / err, 3.0) << "n=" << n;
    prev = err;
  }
}

TEST(Spectrum, TorusFourierOracle) {
  const auto p = potential_torus({});
  const auto r = spectral_gap(discretize_generator(p, drift_zero(2), Grid::torus2d(32, kTwoPi)));
  EXPECT_NEAR(r.gap, oracle::torus_first_mode(32, kTwoPi), 1e-6);
  EXPECT_NEAR(r.gap, -1.0, 5e-3);
  EXPECT_EQ(r.kernel_dim, 1);
}

TEST(Spectrum, TorusDenseModes) {
  // small grid: every eigenvalue is a sum of two 1D sin^2 modes
  const int n = 16;
  const auto p = potential_torus({});
  const auto r = spectral_gap(discretize_generator(p, drift_zero(2), Grid::torus2d(n, kTwoPi)));
  ASSERT_EQ(r.eigenvalues.size(), static_cast<std::size_t>(n * n));
  std::vector<double> expected;
  const double h = kTwoPi / n;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double sj = std::sin(j * h / 2), sk = std::sin(k * h / 2);
      expected.push_back(-4.0 / (h * h) * (sj * sj + sk * sk));
    }
  std::sort(expected.rbegin(), expected.rend());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(r.eigenvalues[i].real(), expected[i], 1e-9);
}

TEST(Spectrum, KernelEigenvectorIsConstant) {
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto g = discretize_generator(p, drift_skew_grad(SkewMatrix::planar(1.0), p), Grid::box2d(-6, 6, 20, -3, 3, 20));
  const auto r = spectral_gap(g);
  EXPECT_LE(relative_nonconstancy(g, r.kernel_eigenvector), 1e-6);
}

TEST(Spectrum, IterativeAgreesWithDense) {
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto g = discretize_generator(p, drift_skew_grad(SkewMatrix::planar(0.4), p), Grid::box2d(-6, 6, 24, -3, 3, 24));
  SpectrumOptions dense;
  dense.dense_cap = 1000;
  SpectrumOptions iterative;
  iterative.dense_cap = 100;
  const auto a = spectral_gap(g, dense);
  const auto b = spectral_gap(g, iterative);
  EXPECT_EQ(a.method, "dense");
  EXPECT_EQ(b.method, "shift-invert-arnoldi");
  EXPECT_NEAR(a.gap, b.gap, 1e-8);
}

TEST(Spectrum, DisconnectedWellsHaveTwoKernelModes) {
  // a barrier of height 60 leaves the two wells numerically decoupled
  const auto p = potential_double_well(60.0);
  const auto g = discretize_generator(p, drift_zero(1), Grid::box1d(-1.8, 1.8, 300));
  try {
    spectral_gap(g);
    FAIL() << "expected a kernel multiplicity error";
  } catch (const KernelMultiplicityError& e) {
    EXPECT_EQ(e.multiplicity(), 2);
  }
}

TEST(Spectrum, OrderingOnCoarseGrid) {
  std::mt19937_64 rng(3);
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto grid = Grid::box2d(-6, 6, 48, -3, 3, 48);
  const double gap0 = spectral_gap(discretize_generator(p, drift_zero(2), grid)).gap;
  EXPECT_NEAR(gap0, -1.0, 2e-2);
  for (int i = 0; i < 4; ++i) {
    const auto s = random_skew(2, rng);
    const double gap = spectral_gap(discretize_generator(p, drift_skew_grad(s, p), grid)).gap;
    EXPECT_LE(gap, gap0 + 1e-10);
    EXPECT_NEAR(gap, spectral_abscissa(ou_drift_matrix(diag2(-1, -4), s)), 2e-2);
  }
}

TEST(Spectrum, TorusStreamSweepIsMonotone) {
  const auto p = potential_torus({});
  double prev = 0.0;
  for (double k : {0.0, 1.0, 2.0, 4.0}) {
    const auto c = drift_stream_2d(stream_sine_products({{1, 1, k}}), p);
    const double gap = spectral_gap(discretize_generator(p, c, Grid::torus2d(32, kTwoPi))).gap;
    if (k > 0.0) EXPECT_LE(gap, prev + 1e-10) << "k=" << k;
    prev = gap;
  }
}

TEST(DirichletForm, ConstantAnnihilates) {
  const auto g = discretize_generator(ou1d(), drift_zero(1), Grid::box1d(-8, 8, 128));
  EXPECT_EQ(dirichlet_form(g, Vec::Constant(g.size(), 2.0), random_vec(g.size(), 4)), 0.0);
}

TEST(DirichletForm, LinearFunction) {
  const auto g = discretize_generator(ou1d(), drift_zero(1), Grid::box1d(-8, 8, 512));
  Vec f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = g.grid().point(i)[0];
  EXPECT_NEAR(dirichlet_form(g, f, f), 1.0, 1e-3);
}

TEST(DirichletForm, Symmetric) {
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto g = discretize_generator(p, drift_zero(2), Grid::box2d(-6, 6, 30, -3, 3, 30));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vec f = random_vec(g.size(), 20 + s), h = random_vec(g.size(), 40 + s);
    EXPECT_NEAR(dirichlet_form(g, f, h), dirichlet_form(g, h, f), 1e-12 * (1.0 + std::abs(dirichlet_form(g, f, h))));
    EXPECT_GE(dirichlet_form(g, f, f), 0.0);
  }
}

TEST(EnergyIdentity, Reversible) {
  const auto g = discretize_generator(ou1d(), drift_zero(1), Grid::box1d(-8, 8, 256));
  const Vec f = random_vec(g.size(), 5);
  const auto [eps, rhs] = energy_identity_check(g, f);
  EXPECT_NEAR(eps, rhs, 1e-12 * std::max(1.0, std::abs(eps)));
}

TEST(EnergyIdentity, Skew) {
  std::mt19937_64 rng(6);
  const auto p = potential_gaussian(diag2(-1, -4));
  const auto g = discretize_generator(p, drift_skew_grad(random_skew(2, rng), p), Grid::box2d(-6, 6, 32, -3, 3, 32));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto [eps, rhs] = energy_identity_check(g, random_vec(g.size(), 60 + s));
    EXPECT_NEAR(eps, rhs, 1e-10 * std::max(1.0, std::abs(eps)));
    EXPECT_LE(eps, rhs + 1e-10 * std::max(1.0, std::abs(eps)));
  }
}

TEST(EnergyIdentity, Constant) {
  const auto g = discretize_generator(ou1d(), drift_zero(1), Grid::box1d(-8, 8, 64));
  const auto [eps, rhs] = energy_identity_check(g, Vec::Ones(g.size()));
  EXPECT_EQ(eps, 0.0);
  EXPECT_NEAR(rhs, 0.0, 1e-14);
}
