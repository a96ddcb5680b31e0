#include "nonrev/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nonrev/errors.hpp"

namespace nonrev {

Domain Domain::torus(Vec periods) {
  if ((periods.array() <= 0.0).any()) throw InvalidArgument("torus periods must be positive");
  Domain d;
  d.kind = DomainKind::torus;
  d.periods = std::move(periods);
  return d;
}

void Domain::wrap(Vec& x) const {
  if (!is_torus()) return;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double p = periods[i];
    double r = std::fmod(x[i], p);
    if (r < 0.0) r += p;
    // fmod of a tiny negative number can round up to exactly p
    if (r >= p) r = 0.0;
    x[i] = r;
  }
}

Potential::Potential(int dim, Domain domain, std::string label, Callbacks callbacks)
    : Potential(dim, std::move(domain), std::move(label), std::move(callbacks), Traits{}) {}

Potential::Potential(int dim, Domain domain, std::string label, Callbacks callbacks,
                     Traits traits)
    : dim_(dim),
      domain_(std::move(domain)),
      label_(std::move(label)),
      callbacks_(std::move(callbacks)),
      traits_(std::move(traits)) {
  if (dim_ < 1) throw InvalidArgument("potential dimension must be positive");
  if (!callbacks_.energy || !callbacks_.gradient)
    throw InvalidArgument("potential needs both energy and gradient");
  if (domain_.is_torus() && domain_.periods.size() != dim_)
    throw InvalidArgument("torus period count does not match dimension");
}

Vec Potential::gradient(const Vec& x) const {
  Vec g(dim_);
  callbacks_.gradient(x, g);
  return g;
}

double Potential::laplacian(const Vec& x) const {
  if (!callbacks_.laplacian) throw InvalidArgument("potential '" + label_ + "' has no Laplacian");
  return callbacks_.laplacian(x);
}

void Potential::hessian(const Vec& x, Mat& out) const {
  if (!callbacks_.hessian) throw InvalidArgument("potential '" + label_ + "' has no Hessian");
  callbacks_.hessian(x, out);
}

Mat Potential::hessian(const Vec& x) const {
  Mat h(dim_, dim_);
  hessian(x, h);
  return h;
}

Mat validate_negative_definite(const Mat& d) {
  if (d.rows() != d.cols() || d.rows() == 0) throw InvalidArgument("D must be a non-empty square matrix");
  const double asym = (d - d.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    std::ostringstream os;
    os << "D is not symmetric (max |D - D'| = " << asym << ")";
    throw InvalidArgument(os.str());
  }
  Mat sym = 0.5 * (d + d.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top < 0.0)) {
    std::ostringstream os;
    os << "D is not negative definite: eigenvalue " << top << " >= 0";
    throw InvalidArgument(os.str());
  }
  return sym;
}

Potential potential_gaussian(const Mat& d) {
  const Mat sym = validate_negative_definite(d);
  const Mat minus_d = -sym;
  const double minus_trace = minus_d.trace();
  const auto n = static_cast<int>(sym.rows());

  Potential::Callbacks cb;
  cb.energy = [minus_d](const Vec& x) { return 0.5 * x.dot(minus_d * x); };
  cb.gradient = [minus_d](const Vec& x, Vec& g) { g.noalias() = minus_d * x; };
  cb.laplacian = [minus_trace](const Vec&) { return minus_trace; };
  cb.hessian = [minus_d](const Vec&, Mat& h) { h = minus_d; };

  Potential::Traits traits;
  traits.gaussian_matrix = sym;
  return Potential(n, Domain::full_space(), "gaussian", std::move(cb), std::move(traits));
}

Potential potential_double_well(double a) {
  if (!(a > 0.0)) throw InvalidArgument("double well needs a > 0");
  Potential::Callbacks cb;
  cb.energy = [a](const Vec& x) {
    const double s = x[0] * x[0] - 1.0;
    return a * s * s;
  };
  cb.gradient = [a](const Vec& x, Vec& g) { g[0] = 4.0 * a * x[0] * (x[0] * x[0] - 1.0); };
  cb.laplacian = [a](const Vec& x) { return 4.0 * a * (3.0 * x[0] * x[0] - 1.0); };
  cb.hessian = [a](const Vec& x, Mat& h) { h(0, 0) = 4.0 * a * (3.0 * x[0] * x[0] - 1.0); };
  return Potential(1, Domain::full_space(), "double_well", std::move(cb));
}

Potential potential_double_well_2d(double a) {
  if (!(a > 0.0)) throw InvalidArgument("double well needs a > 0");
  Potential::Callbacks cb;
  cb.energy = [a](const Vec& x) {
    const double s = x[0] * x[0] - 1.0;
    return a * s * s + 0.5 * x[1] * x[1];
  };
  cb.gradient = [a](const Vec& x, Vec& g) {
    g[0] = 4.0 * a * x[0] * (x[0] * x[0] - 1.0);
    g[1] = x[1];
  };
  cb.laplacian = [a](const Vec& x) { return 4.0 * a * (3.0 * x[0] * x[0] - 1.0) + 1.0; };
  cb.hessian = [a](const Vec& x, Mat& h) {
    h(0, 0) = 4.0 * a * (3.0 * x[0] * x[0] - 1.0);
    h(0, 1) = 0.0;
    h(1, 0) = 0.0;
    h(1, 1) = 1.0;
  };
  return Potential(2, Domain::full_space(), "double_well_2d", std::move(cb));
}

Potential potential_torus(std::vector<CosineTerm> terms) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Potential::Callbacks cb;
  cb.energy = [terms](const Vec& x) {
    double u = 0.0;
    for (const auto& t : terms) u += t.amplitude * std::cos(t.k1 * x[0] + t.k2 * x[1]);
    return u;
  };
  cb.gradient = [terms](const Vec& x, Vec& g) {
    g.setZero(2);
    for (const auto& t : terms) {
      const double s = -t.amplitude * std::sin(t.k1 * x[0] + t.k2 * x[1]);
      g[0] += s * t.k1;
      g[1] += s * t.k2;
    }
  };
  cb.laplacian = [terms](const Vec& x) {
    double l = 0.0;
    for (const auto& t : terms)
      l -= t.amplitude * std::cos(t.k1 * x[0] + t.k2 * x[1]) * (t.k1 * t.k1 + t.k2 * t.k2);
    return l;
  };
  cb.hessian = [terms](const Vec& x, Mat& h) {
    h.setZero(2, 2);
    for (const auto& t : terms) {
      const double c = -t.amplitude * std::cos(t.k1 * x[0] + t.k2 * x[1]);
      h(0, 0) += c * (t.k1 * t.k1);
      h(0, 1) += c * (t.k1 * t.k2);
      h(1, 0) += c * (t.k2 * t.k1);
      h(1, 1) += c * (t.k2 * t.k2);
    }
  };
  Potential::Traits traits;
  traits.uniform = std::all_of(terms.begin(), terms.end(),
                               [](const CosineTerm& t) { return t.amplitude == 0.0; });
  return Potential(2, Domain::torus(Vec::Constant(2, two_pi)), "torus", std::move(cb),
                   std::move(traits));
}

ConfinementReport check_confinement(const Potential& p, double r_max, int n_radii,
                                    int n_directions, ConfinementOptions options) {
  if (!p.has_laplacian()) throw InvalidArgument("confinement check needs a Laplacian");
  if (p.domain().is_torus()) throw InvalidArgument("confinement check needs a full-space domain");
  if (!(r_max > 0.0) || n_radii < 1 || n_directions < 1)
    throw InvalidArgument("confinement check needs r_max > 0 and positive counts");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  const int d = p.dim();
  std::vector<Vec> directions;
  directions.reserve(static_cast<std::size_t>(n_directions));
  while (static_cast<int>(directions.size()) < n_directions) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u[i] = normal(rng);
    const double norm = u.norm();
    if (norm > 1e-12) directions.push_back(u / norm);
  }

  ConfinementReport report;
  Vec g(d);
  for (int k = 1; k <= n_radii; ++k) {
    const double r = r_max * k / n_radii;
    double acc = 0.0;
    for (const auto& u : directions) {
      const Vec x = r * u;
      p.gradient(x, g);
      acc += 0.5 * g.squaredNorm() - p.laplacian(x);
    }
    report.radii.push_back(r);
    report.values.push_back(acc / n_directions);
  }

  const double first = report.values.front();
  const double last = report.values.back();
  const bool grew = last - first > (options.growth_factor - 1.0) * std::max(std::abs(first), 1.0);
  // the last third of the profile must be strictly increasing
  const std::size_t n = report.values.size();
  const std::size_t tail_start = n - std::min(n, std::max<std::size_t>(2, n / 3));
  bool tail_increasing = n >= 2;
  for (std::size_t i = tail_start + 1; i < n && tail_increasing; ++i)
    tail_increasing = report.values[i] > report.values[i - 1];
  report.diverges = grew && tail_increasing;
  return report;
}

double grad_check(const Potential& p, std::span<const Vec> points, double h_fd) {
  if (!(h_fd > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  double worst = 0.0;
  Vec g(p.dim());
  for (const auto& x : points) {
    p.gradient(x, g);
    Vec probe = x;
    for (int i = 0; i < p.dim(); ++i) {
      probe[i] = x[i] + h_fd;
      const double up = p.energy(probe);
      probe[i] = x[i] - h_fd;
      const double down = p.energy(probe);
      probe[i] = x[i];
      worst = std::max(worst, std::abs((up - down) / (2.0 * h_fd) - g[i]));
    }
  }
  return worst;
}

}  // namespace nonrev
