#pragma once

#include <complex>
#include <random>
#include <vector>

#include "nonrev/drift.hpp"
#include "nonrev/model.hpp"

namespace nonrev {

/// The Gaussian case: U = -x'Dx/2, C = S D x, so X is Ornstein-Uhlenbeck with
/// drift matrix B = (I + S) D and stationary covariance -D^-1 for every S.
struct OUModel {
  Mat d;
  SkewMatrix s;
  Mat b;

  int dim() const { return static_cast<int>(d.rows()); }
};

OUModel make_ou_model(const Mat& d, const SkewMatrix& s);

/// B = D + S D. Validates D (symmetric negative definite) and dimensions.
Mat ou_drift_matrix(const Mat& d, const SkewMatrix& s);

struct DriftSpectrum {
  std::vector<std::complex<double>> eigenvalues;  // descending real part
  double abscissa = 0.0;
  // cond_2 of the eigenvector matrix; +inf when B is numerically defective.
  double eigvec_condition = 1.0;
};

/// Eigenvalues of a square real matrix. 2x2 matrices use the characteristic
/// polynomial directly so repeated roots come out exact.
DriftSpectrum drift_spectrum(const Mat& b);

/// max Re over eigenvalues of B.
double spectral_abscissa(const Mat& b);

/// -D^-1.
Mat stationary_covariance(const Mat& d);

/// ||B S + S B' + 2 I||_max.
double lyapunov_residual(const Mat& b, const Mat& sigma);

/// Solves B S + S B' + 2 I = 0 for a stable B.
Mat solve_lyapunov(const Mat& b);

/// e^{Bt} (Sigma0 - Sigma_inf) e^{B't} + Sigma_inf.
Mat covariance_at(const Mat& b, const Mat& sigma0, double t);

struct ScalingPoint {
  double k = 0.0;
  double abscissa = 0.0;
  double eigvec_condition = 1.0;
};

/// Abscissa of (I + k S) D for each k (ascending, non-negative).
std::vector<ScalingPoint> scaling_study(const Mat& d, const SkewMatrix& s, const std::vector<double>& ks);

/// -Q diag(lambda) Q' with lambda uniform in [lo, hi] and Q Haar-ish from QR.
Mat random_negative_definite(int dim, std::mt19937_64& rng, double lo = 0.5, double hi = 5.0);

}  // namespace nonrev
