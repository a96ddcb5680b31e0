#include "nonrev/ou_exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "nonrev/errors.hpp"

namespace nonrev {

Mat ou_drift_matrix(const Mat& d, const SkewMatrix& s) {
  const Mat dd = validate_negative_definite(d);
  if (s.dim() != dd.rows()) throw InvalidArgument("skew matrix dimension does not match D");
  return dd + s.matrix() * dd;
}

OUModel make_ou_model(const Mat& d, const SkewMatrix& s) {
  const Mat dd = validate_negative_definite(d);
  return OUModel{dd, s, ou_drift_matrix(dd, s)};
}

namespace {

void sort_descending_real(std::vector<std::complex<double>>& ev) {
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

DriftSpectrum spectrum_2x2(const Mat& b) {
  const double half_trace = 0.5 * (b(0, 0) + b(1, 1));
  const double det = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
  const double disc = half_trace * half_trace - det;
  DriftSpectrum out;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    // stable root pair: the larger-magnitude root first, the other via det
    const double big = half_trace >= 0.0 ? half_trace + r : half_trace - r;
    const double small = big != 0.0 ? det / big : 0.0;
    out.eigenvalues = {{big, 0.0}, {small, 0.0}};
  } else {
    const double r = std::sqrt(-disc);
    out.eigenvalues = {{half_trace, r}, {half_trace, -r}};
  }
  sort_descending_real(out.eigenvalues);
  out.abscissa = out.eigenvalues.front().real();
  return out;
}

double condition_number(const Eigen::MatrixXcd& v) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

}  // namespace

DriftSpectrum drift_spectrum(const Mat& b) {
  if (b.rows() != b.cols() || b.rows() == 0) throw InvalidArgument("drift matrix must be square");
  if (!b.allFinite()) throw InvalidArgument("drift matrix has non-finite entries");

  Eigen::EigenSolver<Mat> es(b, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on drift matrix");
  const double cond = condition_number(es.eigenvectors());
  // numerically defective: eigenvectors collapse
  const double eigvec_condition = cond > 1e12 ? std::numeric_limits<double>::infinity() : cond;

  DriftSpectrum out;
  if (b.rows() == 2) {
    out = spectrum_2x2(b);
  } else {
    const auto& ev = es.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    sort_descending_real(out.eigenvalues);
    out.abscissa = out.eigenvalues.front().real();
  }
  out.eigvec_condition = eigvec_condition;
  return out;
}

double spectral_abscissa(const Mat& b) { return drift_spectrum(b).abscissa; }

Mat stationary_covariance(const Mat& d) {
  if (d.rows() != d.cols() || d.rows() == 0) throw InvalidArgument("D must be square");
  Eigen::FullPivLU<Mat> lu(d);
  if (!lu.isInvertible()) throw InvalidArgument("D is singular");
  Mat sigma = -lu.inverse();
  return 0.5 * (sigma + sigma.transpose());
}

double lyapunov_residual(const Mat& b, const Mat& sigma) {
  if (b.rows() != sigma.rows() || b.cols() != sigma.cols()) throw InvalidArgument("shape mismatch");
  const Mat r = b * sigma + sigma * b.transpose() + 2.0 * Mat::Identity(b.rows(), b.cols());
  return r.cwiseAbs().maxCoeff();
}

Mat solve_lyapunov(const Mat& b) {
  const auto n = b.rows();
  if (spectral_abscissa(b) >= 0.0) throw InvalidArgument("Lyapunov equation needs a stable drift matrix");
  // (I kron B + B kron I) vec(S) = -2 vec(I), column-major vec
  const Mat id = Mat::Identity(n, n);
  Mat k = Mat::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) k.block(j * n, i * n, n, n) += b(j, i) * id;
  for (Eigen::Index i = 0; i < n; ++i) k.block(i * n, i * n, n, n) += b;
  Vec rhs = Vec::Zero(n * n);
  for (Eigen::Index i = 0; i < n; ++i) rhs(i * n + i) = -2.0;
  const Vec x = k.fullPivLu().solve(rhs);
  Mat sigma = Eigen::Map<const Mat>(x.data(), n, n);
  return 0.5 * (sigma + sigma.transpose());
}

Mat covariance_at(const Mat& b, const Mat& sigma0, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("time must be non-negative");
  if (sigma0.rows() != b.rows() || sigma0.cols() != b.cols()) throw InvalidArgument("shape mismatch");
  if ((sigma0 - sigma0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sigma0.cwiseAbs().maxCoeff()))
    throw InvalidArgument("initial covariance must be symmetric");
  if (t == 0.0) return sigma0;
  const Mat sigma_inf = solve_lyapunov(b);
  const Mat e = (b * t).exp();
  Mat sigma = e * (sigma0 - sigma_inf) * e.transpose() + sigma_inf;
  return 0.5 * (sigma + sigma.transpose());
}

std::vector<ScalingPoint> scaling_study(const Mat& d, const SkewMatrix& s, const std::vector<double>& ks) {
  const Mat dd = validate_negative_definite(d);
  if (s.dim() != dd.rows()) throw InvalidArgument("skew matrix dimension does not match D");
  std::vector<ScalingPoint> out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(ks[i] >= 0.0)) throw InvalidArgument("scaling factors must be non-negative");
    if (i > 0 && ks[i] < ks[i - 1]) throw InvalidArgument("scaling factors must be ascending");
    const Mat b = ou_drift_matrix(dd, s.scaled(ks[i]));
    const auto spec = drift_spectrum(b);
    out.push_back({ks[i], spec.abscissa, spec.eigvec_condition});
  }
  return out;
}

Mat random_negative_definite(int dim, std::mt19937_64& rng, double lo, double hi) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(lo, hi);
  Mat a(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  const Mat q = qr.householderQ();
  Vec lambda(dim);
  for (int i = 0; i < dim; ++i) lambda[i] = unif(rng);
  Mat d = -(q * lambda.asDiagonal() * q.transpose());
  return 0.5 * (d + d.transpose());
}

}  // namespace nonrev
