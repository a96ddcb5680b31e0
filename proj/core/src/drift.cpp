#include "nonrev/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nonrev/errors.hpp"

namespace nonrev {

SkewMatrix::SkewMatrix(const Mat& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0)
    throw InvalidArgument("skew matrix must be square and non-empty");
  const double asym = (entries + entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    std::ostringstream os;
    os << "matrix is not skew-symmetric (max |S + S'| = " << asym << ")";
    throw InvalidArgument(os.str());
  }
  entries_ = 0.5 * (entries - entries.transpose());
}

SkewMatrix SkewMatrix::zero(int dim) { return SkewMatrix(Mat::Zero(dim, dim)); }

SkewMatrix SkewMatrix::planar(double s) {
  Mat m(2, 2);
  m << 0.0, s, -s, 0.0;
  return SkewMatrix(m);
}

SkewMatrix SkewMatrix::scaled(double k) const { return SkewMatrix(k * entries_); }

SkewMatrix random_skew(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat a(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) a(i, j) = normal(rng);
  return SkewMatrix(a - a.transpose());
}

StreamFunction stream_sine_products(std::vector<SineProductTerm> terms) {
  StreamFunction psi;
  psi.value = [terms](const Vec& x) {
    double v = 0.0;
    for (const auto& t : terms)
      v += t.amplitude * std::sin(t.k1 * x[0] + t.phase1) * std::sin(t.k2 * x[1] + t.phase2);
    return v;
  };
  psi.gradient = [terms](const Vec& x, Vec& g) {
    g.setZero(2);
    for (const auto& t : terms) {
      const double a1 = t.k1 * x[0] + t.phase1;
      const double a2 = t.k2 * x[1] + t.phase2;
      g[0] += t.amplitude * t.k1 * std::cos(a1) * std::sin(a2);
      g[1] += t.amplitude * t.k2 * std::sin(a1) * std::cos(a2);
    }
  };
  psi.label = "sine_products";
  return psi;
}

Vec DriftField::operator()(const Vec& x) const {
  Vec out(dim_);
  eval_(x, out);
  return out;
}

double DriftField::divergence(const Vec& x, double h_fd) const {
  if (divergence_) return divergence_(x);
  return divergence_fd(x, h_fd);
}

double DriftField::divergence_fd(const Vec& x, double h_fd) const {
  if (!(h_fd > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  // five-point stencil per axis, fourth order
  Vec probe = x;
  Vec c(dim_);
  double div = 0.0;
  constexpr double kOffsets[4] = {2.0, 1.0, -1.0, -2.0};
  constexpr double kWeights[4] = {-1.0, 8.0, -8.0, 1.0};
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (int s = 0; s < 4; ++s) {
      probe[i] = x[i] + kOffsets[s] * h_fd;
      eval_(probe, c);
      acc += kWeights[s] * c[i];
    }
    probe[i] = x[i];
    div += acc / (12.0 * h_fd);
  }
  return div;
}

DriftField DriftField::scaled(double k) const {
  DriftField out = *this;
  auto eval = eval_;
  out.eval_ = [eval, k](const Vec& x, Vec& c) {
    eval(x, c);
    c *= k;
  };
  if (divergence_) {
    auto div = divergence_;
    out.divergence_ = [div, k](const Vec& x) { return k * div(x); };
  }
  if (skew_) out.skew_ = skew_->scaled(k);
  if (stream_) {
    StreamFunction s = *stream_;
    auto value = s.value;
    auto grad = s.gradient;
    s.value = [value, k](const Vec& x) { return k * value(x); };
    s.gradient = [grad, k](const Vec& x, Vec& g) {
      grad(x, g);
      g *= k;
    };
    out.stream_ = s;
  }
  std::ostringstream os;
  os << k << "*" << label_;
  out.label_ = os.str();
  return out;
}

DriftField drift_zero(int d) {
  if (d < 1) throw InvalidArgument("drift dimension must be positive");
  DriftField c;
  c.dim_ = d;
  c.kind_ = DriftKind::zero;
  c.label_ = "zero";
  c.eval_ = [](const Vec&, Vec& out) { out.setZero(); };
  c.divergence_ = [](const Vec&) { return 0.0; };
  return c;
}

namespace {

// trace(S H) summed over antisymmetric pairs; each pair cancels exactly when
// S is bitwise antisymmetric and H bitwise symmetric.
double paired_trace(const Mat& s, const Mat& h) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) acc += s(i, j) * h(j, i) + s(j, i) * h(i, j);
  return acc;
}

// g' S g summed over antisymmetric pairs.
double paired_quadratic_form(const Mat& s, const Vec& g) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = i + 1; j < s.cols(); ++j)
      acc += s(i, j) * (g[i] * g[j]) + s(j, i) * (g[j] * g[i]);
  return acc;
}

}  // namespace

DriftField drift_skew_grad(const SkewMatrix& s, const Potential& p) {
  if (s.dim() != p.dim()) throw InvalidArgument("skew matrix dimension does not match potential");
  DriftField c;
  c.dim_ = p.dim();
  c.kind_ = DriftKind::skew_grad;
  c.label_ = "skew_grad";
  c.skew_ = s;
  const Mat m = s.matrix();
  // Potential is cheap to copy (shared callbacks by value)
  c.eval_ = [m, p](const Vec& x, Vec& out) {
    thread_local Vec g;
    g.resize(p.dim());
    p.gradient(x, g);
    out.noalias() = m * g;
  };
  if (p.has_hessian()) {
    c.divergence_ = [m, p](const Vec& x) { return paired_trace(m, p.hessian(x)); };
  }
  return c;
}

DriftField drift_stream_2d(const StreamFunction& psi, const Potential& p) {
  if (p.dim() != 2 || !p.domain().is_torus())
    throw InvalidArgument("stream-function drifts need a 2-torus domain");
  DriftField c;
  c.dim_ = 2;
  c.kind_ = DriftKind::stream_2d;
  c.label_ = "stream(" + psi.label + ")";
  c.stream_ = psi;
  auto grad = psi.gradient;
  c.eval_ = [grad](const Vec& x, Vec& out) {
    Vec g(2);
    grad(x, g);
    out[0] = g[1];
    out[1] = -g[0];
  };
  c.divergence_ = [](const Vec&) { return 0.0; };
  return c;
}

DriftField drift_user(int dim, std::string label, DriftField::Eval eval,
                      DriftField::Divergence divergence) {
  if (dim < 1 || !eval) throw InvalidArgument("user drift needs a dimension and an evaluator");
  DriftField c;
  c.dim_ = dim;
  c.kind_ = DriftKind::user;
  c.label_ = std::move(label);
  c.eval_ = std::move(eval);
  c.divergence_ = std::move(divergence);
  return c;
}

double weighted_divergence(const DriftField& c, const Potential& p, const Vec& x,
                           DivergenceMode mode, double h_fd) {
  if (c.dim() != p.dim()) throw InvalidArgument("drift and potential dimensions differ");
  const bool analytic_available =
      c.has_analytic_divergence() ||
      (c.kind() == DriftKind::skew_grad && p.has_hessian());
  if (mode == DivergenceMode::analytic && !analytic_available)
    throw InvalidArgument("no analytic divergence for drift '" + c.label() + "'");
  const bool analytic = mode == DivergenceMode::analytic ||
                        (mode == DivergenceMode::automatic && analytic_available);

  const Vec g = p.gradient(x);
  if (analytic && c.kind() == DriftKind::skew_grad) {
    const Mat& s = c.skew()->matrix();
    return paired_trace(s, p.hessian(x)) - paired_quadratic_form(s, g);
  }
  const double div = analytic ? c.divergence(x) : c.divergence_fd(x, h_fd);
  return div - c(x).dot(g);
}

double weighted_divergence_residual(const DriftField& c, const Potential& p,
                                    std::span<const Vec> probes, double h_fd,
                                    DivergenceMode mode) {
  double worst = 0.0;
  for (const auto& x : probes)
    worst = std::max(worst, std::abs(weighted_divergence(c, p, x, mode, h_fd)));
  return worst;
}

TestFunction bump(Vec center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("bump radius must be positive");
  TestFunction f;
  const double r2inv = 1.0 / (radius * radius);
  f.value = [center, r2inv](const Vec& x) {
    const double q = (x - center).squaredNorm() * r2inv;
    return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
  };
  f.gradient = [center, r2inv](const Vec& x, Vec& g) {
    const Vec dx = x - center;
    const double q = dx.squaredNorm() * r2inv;
    if (q >= 1.0) {
      g.setZero(x.size());
      return;
    }
    const double one_minus = 1.0 - q;
    const double v = std::exp(-1.0 / one_minus);
    g = (-2.0 * v * r2inv / (one_minus * one_minus)) * dx;
  };
  std::ostringstream label;
  label << "bump(center=" << center.transpose() << ", radius=" << radius << ")";
  f.label = label.str();
  return f;
}

TestFunction constant_function(int dim, double value) {
  TestFunction f;
  f.value = [value](const Vec&) { return value; };
  f.gradient = [dim](const Vec&, Vec& g) { g.setZero(dim); };
  f.label = "constant";
  return f;
}

std::vector<TestFunction> bump_family(int dim, int count, std::uint64_t seed, double center_box,
                                      double r_lo, double r_hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center(-center_box, center_box);
  std::uniform_real_distribution<double> radius(r_lo, r_hi);
  std::vector<TestFunction> out;
  for (int k = 0; k < count; ++k) {
    Vec c(dim);
    for (int i = 0; i < dim; ++i) c[i] = center(rng);
    out.push_back(bump(c, radius(rng)));
  }
  return out;
}

namespace {

template <typename Visit>
void for_each_midpoint(const QuadratureGrid& q, Visit&& visit) {
  const auto d = static_cast<int>(q.n.size());
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vec x(d);
  double cell = 1.0;
  for (int a = 0; a < d; ++a) cell *= (q.hi[a] - q.lo[a]) / q.n[static_cast<std::size_t>(a)];
  while (true) {
    for (int a = 0; a < d; ++a) {
      const double h = (q.hi[a] - q.lo[a]) / q.n[static_cast<std::size_t>(a)];
      x[a] = q.lo[a] + (idx[static_cast<std::size_t>(a)] + 0.5) * h;
    }
    visit(x, cell);
    int a = 0;
    while (a < d && ++idx[static_cast<std::size_t>(a)] == q.n[static_cast<std::size_t>(a)]) {
      idx[static_cast<std::size_t>(a)] = 0;
      ++a;
    }
    if (a == d) break;
  }
}

}  // namespace

std::vector<double> weak_invariance_residual(const DriftField& c, const Potential& p,
                                             std::span<const TestFunction> test_fns,
                                             const QuadratureGrid& quadrature) {
  if (test_fns.empty()) throw InvalidArgument("weak invariance check needs test functions");
  if (c.dim() != p.dim() || static_cast<int>(quadrature.n.size()) != p.dim() ||
      quadrature.lo.size() != p.dim() || quadrature.hi.size() != p.dim())
    throw InvalidArgument("quadrature grid dimension does not match the potential");
  for (int n : quadrature.n)
    if (n < 1) throw InvalidArgument("quadrature grid needs at least one cell per axis");

  // Shift U by its grid minimum so exp(-U) neither overflows nor underflows.
  double u_min = std::numeric_limits<double>::infinity();
  for_each_midpoint(quadrature, [&](const Vec& x, double) { u_min = std::min(u_min, p.energy(x)); });

  const std::size_t m = test_fns.size();
  std::vector<double> signed_sum(m, 0.0), abs_sum(m, 0.0);
  Vec cx(p.dim()), gf(p.dim());
  for_each_midpoint(quadrature, [&](const Vec& x, double cell) {
    const double w = std::exp(-(p.energy(x) - u_min)) * cell;
    c.eval(x, cx);
    const double cnorm = cx.norm();
    for (std::size_t k = 0; k < m; ++k) {
      test_fns[k].gradient(x, gf);
      signed_sum[k] += cx.dot(gf) * w;
      abs_sum[k] += cnorm * gf.norm() * w;
    }
  });

  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k)
    out[k] = abs_sum[k] > 0.0 ? std::abs(signed_sum[k]) / abs_sum[k] : 0.0;
  return out;
}

}  // namespace nonrev
