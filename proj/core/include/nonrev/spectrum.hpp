#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "nonrev/drift.hpp"
#include "nonrev/model.hpp"

namespace nonrev {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 8;
  bool periodic = false;

  // Box axes place nodes at lo..hi inclusive; periodic axes at lo + i*h, i < n.
  double spacing() const { return periodic ? (hi - lo) / n : (hi - lo) / (n - 1); }
  double node(int i) const { return lo + i * spacing(); }
};

/// A tensor grid of one or two axes, flattened with axis 0 fastest.
class Grid {
 public:
  static constexpr int kDefaultMaxPoints = 40000;

  explicit Grid(std::vector<GridAxis> axes, int max_points = kDefaultMaxPoints);

  static Grid box1d(double lo, double hi, int n);
  static Grid box2d(double x_lo, double x_hi, int nx, double y_lo, double y_hi, int ny);
  static Grid torus2d(int n, double period);

  int dim() const { return static_cast<int>(axes_.size()); }
  const GridAxis& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
  int size() const { return size_; }
  int index(int i, int j = 0) const { return i + axes_[0].n * j; }
  Vec point(int flat) const;

 private:
  std::vector<GridAxis> axes_;
  int size_ = 0;
};

/// A nearest-neighbour face of the grid between nodes tail and head =
/// tail + e_axis (wrapping on periodic axes).
struct GridFace {
  int tail = 0;
  int head = 0;
  int axis = 0;
  double diffusion = 0.0;  // pi_face / h^2, normalized weights
  double flux = 0.0;       // pi-weighted normal flux of C across the face, / h
};

/// Discretized L_C = Laplacian - grad U . grad + C . grad in weighted form:
/// W L = Sym + K with W = diag(weights), Sym symmetric negative semidefinite
/// (zero-flux finite volume form of div(pi grad f)/pi) and K antisymmetric
/// with zero row sums (the skew form of C . grad). Hence L 1 = 0, L is
/// self-adjoint in <f, g>_pi = sum w f g when C = 0, and <A f, f>_pi = 0.
class GeneratorMatrix {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  GeneratorMatrix(Grid grid, Vec weights, std::vector<GridFace> faces, std::string potential_label,
                  std::string drift_label);

  const Grid& grid() const { return grid_; }
  int size() const { return grid_.size(); }
  const Vec& weights() const { return weights_; }
  const std::vector<GridFace>& faces() const { return faces_; }
  const std::string& potential_label() const { return potential_label_; }
  const std::string& drift_label() const { return drift_label_; }
  bool has_advection() const { return has_advection_; }

  // L, its symmetric part L0 and its advection part A, each applied to f.
  Vec apply(const Vec& f) const;
  Vec apply_symmetric(const Vec& f) const;
  Vec apply_advection(const Vec& f) const;

  // Sym + K (the weighted operator W L) and W^-1/2 (Sym + K) W^-1/2, which
  // is similar to L.
  const SpMat& weighted() const { return weighted_; }
  SpMat symmetrized() const;
  SpMat generator() const;  // L itself

  double inner(const Vec& f, const Vec& g) const;  // sum w f g

 private:
  Grid grid_;
  Vec weights_;
  std::vector<GridFace> faces_;
  std::string potential_label_;
  std::string drift_label_;
  bool has_advection_ = false;
  SpMat sym_;
  SpMat skew_;
  SpMat weighted_;
};

struct DiscretizeOptions {
  // Max equilibrium mass allowed beyond the box, estimated per open side as
  // rim density / outward slope of U.
  double boundary_mass_tol = 1e-8;
};

GeneratorMatrix discretize_generator(const Potential& p, const DriftField& c, const Grid& g,
                                     const DiscretizeOptions& options = {});

struct SpectrumOptions {
  double kernel_tol = 1e-6;
  int dense_cap = 600;     // dense eigensolve up to this many points
  int n_iterative = 20;    // eigenvalues requested from the iterative path
  double shift = 0.05;
};

struct SpectrumResult {
  std::vector<std::complex<double>> eigenvalues;  // descending real part
  double gap = 0.0;
  int kernel_dim = 0;
  // eigenvectors of L (not W^1/2 scaled) for the eigenvalues attaining the gap
  std::vector<Eigen::VectorXcd> top_eigenvectors;
  std::vector<std::complex<double>> top_eigenvalues;
  Vec kernel_eigenvector;
  std::string method;  // "dense-symmetric", "dense", "shift-invert-arnoldi"
};

/// lambda = max Re over the non-kernel spectrum. Kernel eigenvalues are those
/// with |mu| < kernel_tol * |Re of the first non-kernel candidate|; anything
/// other than a simple kernel throws KernelMultiplicityError.
SpectrumResult spectral_gap(const GeneratorMatrix& g, const SpectrumOptions& options = {});

/// sum over faces of pi_face (f_head - f_tail)(g_head - g_tail) / h^2.
double dirichlet_form(const GeneratorMatrix& g, const Vec& f, const Vec& h);

/// (eps(f, f), -<L f, f>_pi).
std::pair<double, double> energy_identity_check(const GeneratorMatrix& g, const Vec& f);

/// Relative deviation from a constant in the pi-weighted norm.
double relative_nonconstancy(const GeneratorMatrix& g, const Vec& f);

}  // namespace nonrev
