#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library, so agreement is a genuine cross-check.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Sigma' = B Sigma + Sigma B' + 2I integrated with classical RK4.
Eigen::MatrixXd rk4_lyapunov(const Eigen::MatrixXd& b, const Eigen::MatrixXd& sigma0, double t, double dt);

double normal_cdf(double x);

// TV between N(mu, 1) and N(0, 1): 2 Phi(|mu| / 2) - 1.
double shifted_normal_tv(double mu);

// Largest real part of the roots of z^2 - tr z + det, by hand.
double abscissa_2x2(const Eigen::Matrix2d& b);

// Roots of z^2 + 5z + 4 + 4k^2: the D = diag(-1,-4), S = [[0,1],[-1,0]] family.
double planar_family_abscissa(double k);

// -(4/h^2) sin^2(h/2) with h = period / n: the first nonzero mode of the
// periodic 3-point Laplacian.
double torus_first_mode(int n, double period);

// 1/2 U'^2 - U'' for U = a (x^2 - 1)^2, expanded by hand.
double double_well_confinement(double a, double x);

// x_{t+1} = phi x_t + sqrt(1 - phi^2) e_t, started from stationarity.
std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed);
double ar1_tau(double phi);

// Composite Simpson on [lo, hi] with an even number of panels.
template <class F>
double simpson(F f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return acc * h / 3.0;
}

}  // namespace oracle
