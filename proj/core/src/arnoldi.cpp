#include "nonrev/arnoldi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "nonrev/errors.hpp"

namespace nonrev {

EigenPairs shift_invert_arnoldi(const Eigen::SparseMatrix<double>& a, const ArnoldiOptions& options) {
  using SpMat = Eigen::SparseMatrix<double>;
  const Eigen::Index n = a.rows();
  if (a.cols() != n || n < 3) throw InvalidArgument("Arnoldi needs a square matrix of size >= 3");
  const int nev = static_cast<int>(std::min<Eigen::Index>(options.n_eigenvalues, n - 2));
  const Eigen::Index max_basis = std::min<Eigen::Index>(options.max_basis, n - 1);

  SpMat shifted = a;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= options.shift;
  shifted.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse LU of shifted operator failed: " + lu.lastErrorMessage());

  Eigen::MatrixXd v(n, max_basis + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(max_basis + 1, max_basis);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = normal(rng);
  v.col(0) = w / w.norm();

  EigenPairs out;
  const Eigen::Index first_check = std::min<Eigen::Index>(max_basis, std::max(2 * nev + 10, 40));
  for (Eigen::Index j = 0; j < max_basis; ++j) {
    w = lu.solve(v.col(j));
    // classical Gram-Schmidt, applied twice
    double beta = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = v.leftCols(j + 1).transpose() * w;
      w.noalias() -= v.leftCols(j + 1) * coeff;
      h.col(j).head(j + 1) += coeff;
    }
    beta = w.norm();
    h(j + 1, j) = beta;
    const Eigen::Index m = j + 1;
    const bool breakdown = beta <= 1e-14 * h.topLeftCorner(m, m).norm();
    if (!breakdown) v.col(j + 1) = w / beta;

    const bool check = breakdown || m == max_basis || (m >= first_check && (m - first_check) % 10 == 0);
    if (!check) continue;

    Eigen::EigenSolver<Eigen::MatrixXd> es(h.topLeftCorner(m, m), true);
    if (es.info() != Eigen::Success) throw NumericalError("Hessenberg eigensolve failed");
    const Eigen::VectorXcd theta = es.eigenvalues();
    const Eigen::MatrixXcd y = es.eigenvectors();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index p, Eigen::Index q) { return std::abs(theta[p]) > std::abs(theta[q]); });

    const int want = static_cast<int>(std::min<Eigen::Index>(nev, m));
    bool converged = true;
    for (int r = 0; r < want && converged; ++r) {
      const Eigen::Index idx = order[static_cast<std::size_t>(r)];
      const double resid = (breakdown ? 0.0 : beta) * std::abs(y(m - 1, idx)) / y.col(idx).norm();
      converged = resid <= options.tol * std::abs(theta[idx]);
    }
    if (!converged && m < max_basis && !breakdown) continue;

    out.converged = converged;
    out.basis_size = static_cast<int>(m);
    for (int r = 0; r < want; ++r) {
      const Eigen::Index idx = order[static_cast<std::size_t>(r)];
      out.values.push_back(options.shift + 1.0 / theta[idx]);
      Eigen::VectorXcd ritz = v.leftCols(m).cast<std::complex<double>>() * y.col(idx);
      ritz /= ritz.norm();
      out.vectors.push_back(std::move(ritz));
    }
    return out;
  }
  return out;
}

}  // namespace nonrev
