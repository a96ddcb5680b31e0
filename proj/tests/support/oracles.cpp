#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace oracle {

Eigen::MatrixXd rk4_lyapunov(const Eigen::MatrixXd& b, const Eigen::MatrixXd& sigma0, double t, double dt) {
  const auto n = b.rows();
  const Eigen::MatrixXd two = 2.0 * Eigen::MatrixXd::Identity(n, n);
  auto rhs = [&](const Eigen::MatrixXd& s) -> Eigen::MatrixXd { return b * s + s * b.transpose() + two; };
  Eigen::MatrixXd s = sigma0;
  const long steps = std::lround(t / dt);
  const double h = t / static_cast<double>(steps);
  for (long k = 0; k < steps; ++k) {
    const Eigen::MatrixXd k1 = rhs(s);
    const Eigen::MatrixXd k2 = rhs(s + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = rhs(s + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = rhs(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double shifted_normal_tv(double mu) { return 2.0 * normal_cdf(std::abs(mu) / 2.0) - 1.0; }

double abscissa_2x2(const Eigen::Matrix2d& b) {
  const double tr = b.trace();
  const double det = b.determinant();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
  return std::max(((tr + disc) / 2.0).real(), ((tr - disc) / 2.0).real());
}

double planar_family_abscissa(double k) { return (-5.0 + std::sqrt(std::max(0.0, 9.0 - 16.0 * k * k))) / 2.0; }

double torus_first_mode(int n, double period) {
  const double h = period / n;
  const double s = std::sin(h / 2.0);
  return -4.0 / (h * h) * s * s;
}

double double_well_confinement(double a, double x) {
  const double q = x * x - 1.0;
  return 8.0 * a * a * x * x * q * q - 4.0 * a * (3.0 * x * x - 1.0);
}

std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> out(n);
  const double innov = std::sqrt(1.0 - phi * phi);
  double x = normal(rng);
  for (auto& v : out) {
    v = x;
    x = phi * x + innov * normal(rng);
  }
  return out;
}

double ar1_tau(double phi) { return (1.0 + phi) / (1.0 - phi); }

}  // namespace oracle
