#include "nonrev/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "nonrev/arnoldi.hpp"
#include "nonrev/errors.hpp"

namespace nonrev {

Grid::Grid(std::vector<GridAxis> axes, int max_points) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) throw InvalidArgument("grids have one or two axes");
  long total = 1;
  for (const auto& a : axes_) {
    if (a.n < 8) throw InvalidArgument("grid axes need at least 8 points");
    if (!(a.hi > a.lo)) throw InvalidArgument("grid axes need hi > lo");
    total *= a.n;
  }
  if (total > max_points) {
    std::ostringstream os;
    os << "grid has " << total << " points, above the cap of " << max_points;
    throw InvalidArgument(os.str());
  }
  size_ = static_cast<int>(total);
}

Grid Grid::box1d(double lo, double hi, int n) { return Grid({GridAxis{lo, hi, n, false}}); }

Grid Grid::box2d(double x_lo, double x_hi, int nx, double y_lo, double y_hi, int ny) {
  return Grid({GridAxis{x_lo, x_hi, nx, false}, GridAxis{y_lo, y_hi, ny, false}});
}

Grid Grid::torus2d(int n, double period) {
  return Grid({GridAxis{0.0, period, n, true}, GridAxis{0.0, period, n, true}});
}

Vec Grid::point(int flat) const {
  Vec x(dim());
  x[0] = axes_[0].node(flat % axes_[0].n);
  if (dim() == 2) x[1] = axes_[1].node(flat / axes_[0].n);
  return x;
}

GeneratorMatrix::GeneratorMatrix(Grid grid, Vec weights, std::vector<GridFace> faces,
                                 std::string potential_label, std::string drift_label)
    : grid_(std::move(grid)),
      weights_(std::move(weights)),
      faces_(std::move(faces)),
      potential_label_(std::move(potential_label)),
      drift_label_(std::move(drift_label)) {
  const int n = grid_.size();
  if (weights_.size() != n) throw InvalidArgument("weight vector does not match grid");
  std::vector<Eigen::Triplet<double>> sym, skew;
  sym.reserve(faces_.size() * 4);
  skew.reserve(faces_.size() * 2);
  for (const auto& f : faces_) {
    sym.emplace_back(f.tail, f.head, f.diffusion);
    sym.emplace_back(f.head, f.tail, f.diffusion);
    sym.emplace_back(f.tail, f.tail, -f.diffusion);
    sym.emplace_back(f.head, f.head, -f.diffusion);
    if (f.flux != 0.0) {
      has_advection_ = true;
      skew.emplace_back(f.tail, f.head, 0.5 * f.flux);
      skew.emplace_back(f.head, f.tail, -0.5 * f.flux);
    }
  }
  sym_.resize(n, n);
  sym_.setFromTriplets(sym.begin(), sym.end());
  skew_.resize(n, n);
  skew_.setFromTriplets(skew.begin(), skew.end());
  weighted_ = sym_ + skew_;
  weighted_.makeCompressed();
}

Vec GeneratorMatrix::apply(const Vec& f) const { return (weighted_ * f).cwiseQuotient(weights_); }
Vec GeneratorMatrix::apply_symmetric(const Vec& f) const { return (sym_ * f).cwiseQuotient(weights_); }
Vec GeneratorMatrix::apply_advection(const Vec& f) const { return (skew_ * f).cwiseQuotient(weights_); }

GeneratorMatrix::SpMat GeneratorMatrix::symmetrized() const {
  const Vec inv_sqrt = weights_.cwiseSqrt().cwiseInverse();
  SpMat m = inv_sqrt.asDiagonal() * weighted_ * inv_sqrt.asDiagonal();
  m.makeCompressed();
  return m;
}

GeneratorMatrix::SpMat GeneratorMatrix::generator() const {
  SpMat m = weights_.cwiseInverse().asDiagonal() * weighted_;
  m.makeCompressed();
  return m;
}

double GeneratorMatrix::inner(const Vec& f, const Vec& g) const {
  return (weights_.array() * f.array() * g.array()).sum();
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

void check_grid_matches(const Potential& p, const Grid& g) {
  if (p.dim() != g.dim()) throw InvalidArgument("grid dimension does not match the potential");
  for (int a = 0; a < g.dim(); ++a) {
    const auto& ax = g.axis(a);
    if (p.domain().is_torus()) {
      const double period = p.domain().periods[a];
      if (!ax.periodic || std::abs((ax.hi - ax.lo) - period) > 1e-12 * period)
        throw InvalidArgument("torus potentials need periodic grid axes spanning one period");
    } else if (ax.periodic) {
      throw InvalidArgument("periodic grid axes need a torus potential");
    }
  }
}

int neighbour(const Grid& g, int flat, int axis) {
  const int n0 = g.axis(0).n;
  int i = flat % n0;
  int j = flat / n0;
  int& k = axis == 0 ? i : j;
  const auto& ax = g.axis(axis);
  if (k + 1 < ax.n) {
    ++k;
  } else if (ax.periodic) {
    k = 0;
  } else {
    return -1;
  }
  return g.index(i, j);
}

// Weighted stream function Psi with pi C = (dPsi/dx2, -dPsi/dx1), pi the
// normalized discrete weights' continuous extension. Empty when the drift has
// no such closed form.
std::function<double(const Vec&)> weighted_stream(const Potential& p, const DriftField& c, double u_min,
                                                  double z) {
  if (p.dim() != 2) return {};
  if (c.kind() == DriftKind::skew_grad) {
    const double s = c.skew()->matrix()(0, 1);
    return [p, s, u_min, z](const Vec& x) { return -s * std::exp(-(p.energy(x) - u_min)) / z; };
  }
  if (c.kind() == DriftKind::stream_2d && p.traits().uniform) {
    auto psi = c.stream()->value;
    return [p, psi, u_min, z](const Vec& x) { return psi(x) * std::exp(-(p.energy(x) - u_min)) / z; };
  }
  return {};
}

void fluxes_from_stream(const Grid& g, const std::function<double(const Vec&)>& psi,
                        std::vector<GridFace>& faces) {
  const auto& ax = g.axis(0);
  const auto& ay = g.axis(1);
  const double hx = ax.spacing();
  const double hy = ay.spacing();
  // corner (ci, cj) sits at (x_ci + hx/2, y_cj + hy/2), ci in [-1, nx-1]
  const int cx = ax.n + 1;
  const int cy = ay.n + 1;
  std::vector<double> corner(static_cast<std::size_t>(cx * cy), 0.0);
  auto slot = [cx](int ci, int cj) { return static_cast<std::size_t>((ci + 1) + cx * (cj + 1)); };
  Vec x(2);
  for (int cj = -1; cj < ay.n; ++cj) {
    for (int ci = -1; ci < ax.n; ++ci) {
      const bool outer_x = !ax.periodic && (ci == -1 || ci == ax.n - 1);
      const bool outer_y = !ay.periodic && (cj == -1 || cj == ay.n - 1);
      if (outer_x || outer_y) continue;  // Psi pinned to 0 on the box rim: zero boundary flux
      const int wi = ax.periodic ? (ci + ax.n) % ax.n : ci;
      const int wj = ay.periodic ? (cj + ay.n) % ay.n : cj;
      x[0] = ax.node(wi) + 0.5 * hx;
      x[1] = ay.node(wj) + 0.5 * hy;
      corner[slot(ci, cj)] = psi(x);
    }
  }
  // periodic corners at index -1 duplicate index n-1 bitwise
  for (int cj = -1; cj < ay.n; ++cj)
    for (int ci = -1; ci < ax.n; ++ci) {
      const int wi = ax.periodic ? (ci + ax.n) % ax.n : ci;
      const int wj = ay.periodic ? (cj + ay.n) % ay.n : cj;
      corner[slot(ci, cj)] = corner[slot(wi, wj)];
    }

  for (auto& f : faces) {
    const int i = f.tail % ax.n;
    const int j = f.tail / ax.n;
    if (f.axis == 0) {
      const double phi = (corner[slot(i, j)] - corner[slot(i, j - 1)]) / hy;
      f.flux = phi / hx;
    } else {
      const double phi = -(corner[slot(i, j)] - corner[slot(i - 1, j)]) / hx;
      f.flux = phi / hy;
    }
  }
}

// Least-squares correction making the face fluxes exactly divergence-free
// on the node graph.
void project_divergence_free(int n_nodes, std::vector<GridFace>& faces) {
  if (faces.empty()) return;
  Vec rhs = Vec::Zero(n_nodes);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(faces.size() * 4);
  for (const auto& f : faces) {
    rhs[f.tail] += f.flux;
    rhs[f.head] -= f.flux;
    trip.emplace_back(f.tail, f.tail, 1.0);
    trip.emplace_back(f.head, f.head, 1.0);
    trip.emplace_back(f.tail, f.head, -1.0);
    trip.emplace_back(f.head, f.tail, -1.0);
  }
  SpMat lap(n_nodes, n_nodes);
  lap.setFromTriplets(trip.begin(), trip.end());
  // pin node 0
  const SpMat reduced = lap.bottomRightCorner(n_nodes - 1, n_nodes - 1);
  Eigen::SimplicialLDLT<SpMat> ldlt(reduced);
  if (ldlt.info() != Eigen::Success) throw NumericalError("flux projection failed (disconnected grid?)");
  Vec p = Vec::Zero(n_nodes);
  p.tail(n_nodes - 1) = ldlt.solve(Vec(rhs.tail(n_nodes - 1)));
  for (auto& f : faces) f.flux -= p[f.tail] - p[f.head];
}

}  // namespace

GeneratorMatrix discretize_generator(const Potential& p, const DriftField& c, const Grid& g,
                                     const DiscretizeOptions& options) {
  check_grid_matches(p, g);
  if (c.dim() != p.dim()) throw InvalidArgument("drift and potential dimensions differ");

  const int n = g.size();
  Vec u(n);
  for (int k = 0; k < n; ++k) u[k] = p.energy(g.point(k));
  const double u_min = u.minCoeff();
  Vec w = (-(u.array() - u_min)).exp().matrix();
  const double z = w.sum();
  w /= z;

  // Mass beyond each open side, extrapolating the rim density with the
  // exponential tail exp(-g s), g the outward slope of U there.
  double boundary_mass = 0.0;
  Vec grad(p.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const GridAxis& ax = g.axis(a);
    if (ax.periodic) continue;
    const double h = ax.spacing();
    for (int k = 0; k < n; ++k) {
      const int idx = a == 0 ? k % g.axis(0).n : k / g.axis(0).n;
      if (idx != 0 && idx != ax.n - 1) continue;
      if (w[k] == 0.0) continue;
      p.gradient(g.point(k), grad);
      const double slope = idx == 0 ? -grad[a] : grad[a];
      boundary_mass += slope > 0.0 ? w[k] / (h * slope) : std::numeric_limits<double>::infinity();
    }
  }
  if (!(boundary_mass <= options.boundary_mass_tol)) {
    std::ostringstream os;
    os << "estimated equilibrium mass beyond the box is " << boundary_mass << " (> "
       << options.boundary_mass_tol << "); enlarge the box";
    throw InvalidArgument(os.str());
  }

  std::vector<GridFace> faces;
  Vec cx(p.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const double h = g.axis(a).spacing();
    for (int k = 0; k < n; ++k) {
      const int nb = neighbour(g, k, a);
      if (nb < 0) continue;
      Vec mid = g.point(k);
      mid[a] += 0.5 * h;
      const double omega = std::exp(-(p.energy(mid) - u_min)) / z;
      GridFace f{k, nb, a, omega / (h * h), 0.0};
      if (c.kind() != DriftKind::zero) {
        c.eval(mid, cx);
        f.flux = omega * cx[a] / h;
      }
      faces.push_back(f);
    }
  }

  if (c.kind() != DriftKind::zero) {
    if (auto psi = weighted_stream(p, c, u_min, z)) {
      fluxes_from_stream(g, psi, faces);
    } else {
      project_divergence_free(n, faces);
    }
  }
  return GeneratorMatrix(g, std::move(w), std::move(faces), p.label(), c.label());
}

SpectrumResult spectral_gap(const GeneratorMatrix& gm, const SpectrumOptions& options) {
  const int n = gm.size();
  const SpMat m = gm.symmetrized();
  const Vec inv_sqrt = gm.weights().cwiseSqrt().cwiseInverse();

  std::vector<std::complex<double>> values;
  std::vector<Eigen::VectorXcd> vectors;
  SpectrumResult out;

  if (n <= options.dense_cap) {
    const Eigen::MatrixXd dense(m);
    if (!gm.has_advection()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
      if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolve failed");
      for (int k = 0; k < n; ++k) {
        values.emplace_back(es.eigenvalues()[k], 0.0);
        vectors.emplace_back(es.eigenvectors().col(k).cast<std::complex<double>>());
      }
      out.method = "dense-symmetric";
    } else {
      Eigen::EigenSolver<Eigen::MatrixXd> es(dense, true);
      if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
      for (int k = 0; k < n; ++k) {
        values.push_back(es.eigenvalues()[k]);
        vectors.emplace_back(es.eigenvectors().col(k));
      }
      out.method = "dense";
    }
  } else {
    ArnoldiOptions ao;
    ao.n_eigenvalues = options.n_iterative;
    ao.shift = options.shift;
    auto pairs = shift_invert_arnoldi(m, ao);
    if (!pairs.converged) {
      std::ostringstream os;
      os << "shift-invert Arnoldi did not converge within " << pairs.basis_size << " vectors";
      throw NumericalError(os.str());
    }
    values = std::move(pairs.values);
    vectors = std::move(pairs.vectors);
    out.method = "shift-invert-arnoldi";
  }

  std::vector<std::size_t> order(values.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a].real() != values[b].real()) return values[a].real() > values[b].real();
    return values[a].imag() > values[b].imag();
  });

  // roundoff scale of the operator; the reference eigenvalue is the first
  // one clearly away from zero
  double scale = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  const double numerical_zero = 1e-9 * scale;
  double reference = 0.0;
  for (auto k : order)
    if (std::abs(values[k]) > numerical_zero) {
      reference = std::abs(values[k].real());
      break;
    }
  const double threshold = options.kernel_tol * reference;

  std::vector<std::size_t> kernel, rest;
  for (auto k : order) (std::abs(values[k]) < threshold ? kernel : rest).push_back(k);
  out.kernel_dim = static_cast<int>(kernel.size());
  for (auto k : order) out.eigenvalues.push_back(values[k]);
  if (out.kernel_dim != 1) {
    std::ostringstream os;
    os << "generator kernel has multiplicity " << out.kernel_dim
       << " (expected 1; disconnected support or grid too coarse)";
    throw KernelMultiplicityError(os.str(), out.kernel_dim);
  }
  if (rest.empty()) throw NumericalError("no eigenvalues outside the kernel were computed");

  out.gap = values[rest.front()].real();
  const double band = 1e-8 * std::max(1.0, std::abs(out.gap));
  for (auto k : rest) {
    if (values[k].real() < out.gap - band) break;
    out.top_eigenvalues.push_back(values[k]);
    out.top_eigenvectors.emplace_back(inv_sqrt.cast<std::complex<double>>().cwiseProduct(vectors[k]));
  }

  Eigen::VectorXcd kv = inv_sqrt.cast<std::complex<double>>().cwiseProduct(vectors[kernel.front()]);
  const std::complex<double> mean = (gm.weights().cast<std::complex<double>>().array() * kv.array()).sum();
  out.kernel_eigenvector = (kv / mean).real();
  return out;
}

double dirichlet_form(const GeneratorMatrix& g, const Vec& f, const Vec& h) {
  if (f.size() != g.size() || h.size() != g.size()) throw InvalidArgument("grid function has the wrong size");
  double acc = 0.0;
  for (const auto& face : g.faces())
    acc += face.diffusion * ((f[face.head] - f[face.tail]) * (h[face.head] - h[face.tail]));
  return acc;
}

std::pair<double, double> energy_identity_check(const GeneratorMatrix& g, const Vec& f) {
  if (f.size() != g.size()) throw InvalidArgument("grid function has the wrong size");
  return {dirichlet_form(g, f, f), -g.inner(g.apply(f), f)};
}

double relative_nonconstancy(const GeneratorMatrix& g, const Vec& f) {
  const double mean = g.inner(f, Vec::Ones(f.size()));
  const Vec dev = f.array() - mean;
  const double norm = std::sqrt(g.inner(f, f));
  return norm > 0.0 ? std::sqrt(g.inner(dev, dev)) / norm : 0.0;
}

}  // namespace nonrev
