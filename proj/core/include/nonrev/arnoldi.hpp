#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace nonrev {

struct ArnoldiOptions {
  int n_eigenvalues = 20;
  double shift = 0.05;
  int max_basis = 400;
  double tol = 1e-11;  // relative Ritz residual on the inverted operator
  std::uint64_t seed = 0x1a2b3c4d;
};

struct EigenPairs {
  std::vector<std::complex<double>> values;
  std::vector<Eigen::VectorXcd> vectors;
  int basis_size = 0;
  bool converged = false;
};

/// Eigenvalues of a sparse real matrix nearest to a real shift, via Arnoldi
/// on (A - shift I)^-1 with full reorthogonalization. The basis grows until
/// the wanted Ritz pairs converge (no restarts).
EigenPairs shift_invert_arnoldi(const Eigen::SparseMatrix<double>& a, const ArnoldiOptions& options);

}  // namespace nonrev
