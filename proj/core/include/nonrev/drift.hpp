#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nonrev/model.hpp"

namespace nonrev {

/// A real antisymmetric matrix. Construction checks S + S' = 0 to 1e-12 and
/// stores the exactly antisymmetrized entries, so S(j,i) == -S(i,j) bitwise.
class SkewMatrix {
 public:
  explicit SkewMatrix(const Mat& entries);

  static SkewMatrix zero(int dim);
  // [[0, s], [-s, 0]]
  static SkewMatrix planar(double s);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Mat& matrix() const { return entries_; }
  SkewMatrix scaled(double k) const;

 private:
  Mat entries_;
};

/// A - A' with A entrywise standard normal.
SkewMatrix random_skew(int dim, std::mt19937_64& rng);

/// A scalar field with gradient, used as a stream function on the 2-torus.
struct StreamFunction {
  std::function<double(const Vec&)> value;
  std::function<void(const Vec&, Vec&)> gradient;
  std::string label;
};

struct SineProductTerm {
  int k1 = 1;
  int k2 = 1;
  double amplitude = 1.0;
  double phase1 = 0.0;
  double phase2 = 0.0;
};

/// psi(x) = sum amplitude * sin(k1 x1 + phase1) * sin(k2 x2 + phase2).
StreamFunction stream_sine_products(std::vector<SineProductTerm> terms);

enum class DriftKind { zero, skew_grad, stream_2d, user };

enum class DivergenceMode { automatic, analytic, finite_difference };

/// A perturbation field C(x) added to the reversible drift -grad U.
class DriftField {
 public:
  using Eval = std::function<void(const Vec&, Vec&)>;
  using Divergence = std::function<double(const Vec&)>;

  int dim() const { return dim_; }
  DriftKind kind() const { return kind_; }
  const std::string& label() const { return label_; }

  void eval(const Vec& x, Vec& out) const { eval_(x, out); }
  Vec operator()(const Vec& x) const;

  bool has_analytic_divergence() const { return static_cast<bool>(divergence_); }
  // Analytic divergence when available, central differences otherwise.
  double divergence(const Vec& x, double h_fd = 1e-3) const;
  double divergence_fd(const Vec& x, double h_fd) const;

  const std::optional<SkewMatrix>& skew() const { return skew_; }
  const std::optional<StreamFunction>& stream() const { return stream_; }

  // Returns a copy with every value scaled by k (labels record the factor).
  DriftField scaled(double k) const;

  friend DriftField drift_zero(int d);
  friend DriftField drift_skew_grad(const SkewMatrix& s, const Potential& p);
  friend DriftField drift_stream_2d(const StreamFunction& psi, const Potential& p);
  friend DriftField drift_user(int dim, std::string label, Eval eval, Divergence divergence);

 private:
  DriftField() = default;

  int dim_ = 0;
  DriftKind kind_ = DriftKind::user;
  std::string label_;
  Eval eval_;
  Divergence divergence_;
  std::optional<SkewMatrix> skew_;
  std::optional<StreamFunction> stream_;
};

DriftField drift_zero(int d);

/// C(x) = S grad U(x). Divergence is trace(S Hess U), evaluated so that it is
/// exactly zero in floating point when the Hessian is available.
DriftField drift_skew_grad(const SkewMatrix& s, const Potential& p);

/// C = (d psi / dx2, -d psi / dx1) on the 2-torus; divergence-free.
DriftField drift_stream_2d(const StreamFunction& psi, const Potential& p);

/// A caller-supplied field; `divergence` may be empty (finite differences).
DriftField drift_user(int dim, std::string label, DriftField::Eval eval,
                      DriftField::Divergence divergence = {});

/// e^U div(C e^-U) = div C - C . grad U at x.
double weighted_divergence(const DriftField& c, const Potential& p, const Vec& x,
                           DivergenceMode mode = DivergenceMode::automatic,
                           double h_fd = 1e-3);

/// Max over probes of |div C - C . grad U|. Zero certifies pointwise
/// invariance of exp(-U) at the probes.
double weighted_divergence_residual(const DriftField& c, const Potential& p,
                                    std::span<const Vec> probes, double h_fd = 1e-3,
                                    DivergenceMode mode = DivergenceMode::automatic);

/// A smooth test function with gradient. Bumps are compactly supported.
struct TestFunction {
  std::function<double(const Vec&)> value;
  std::function<void(const Vec&, Vec&)> gradient;
  std::string label;
};

/// exp(-1 / (1 - r^2)) with r = |x - center| / radius, zero outside.
TestFunction bump(Vec center, double radius);
TestFunction constant_function(int dim, double value);

/// Seeded bumps with centers uniform in [-center_box, center_box]^dim and
/// radii uniform in [r_lo, r_hi].
std::vector<TestFunction> bump_family(int dim, int count, std::uint64_t seed,
                                      double center_box = 2.0, double r_lo = 1.0,
                                      double r_hi = 2.0);

/// Tensor midpoint rule on [lo, hi] per axis with n cells per axis.
struct QuadratureGrid {
  Vec lo;
  Vec hi;
  std::vector<int> n;
};

/// For each f: |int (C . grad f) pi| / int |C| |grad f| pi (0 when the
/// normalizer vanishes).
std::vector<double> weak_invariance_residual(const DriftField& c, const Potential& p,
                                             std::span<const TestFunction> test_fns,
                                             const QuadratureGrid& quadrature);

}  // namespace nonrev
