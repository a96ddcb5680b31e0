#include "nonrev/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "nonrev/errors.hpp"
#include "nonrev/ou_exact.hpp"
#include "nonrev/rng.hpp"

namespace nonrev {

long BinSpec::total() const {
  long t = 1;
  for (const auto& a : axes) t *= a.n;
  return t;
}

ReferenceDensity ReferenceDensity::gaussian(const Mat& covariance) {
  const auto d = covariance.rows();
  Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success) throw InvalidArgument("covariance must be positive definite");
  const Mat l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) log_det += 2.0 * std::log(l(i, i));
  const double log_norm = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
  ReferenceDensity ref;
  ref.pdf = [llt, log_norm](const Vec& x) {
    const Vec y = llt.matrixL().solve(x);
    return std::exp(log_norm - 0.5 * y.squaredNorm());
  };
  ref.label = "gaussian";
  return ref;
}

ReferenceDensity ReferenceDensity::from_potential(const Potential& p, const Vec& lo, const Vec& hi,
                                                  int n_per_axis) {
  const int d = p.dim();
  if (lo.size() != d || hi.size() != d || n_per_axis < 1) throw InvalidArgument("bad quadrature box");
  if (d > 2) throw InvalidArgument("quadrature normalization supports one or two axes");
  const Vec h = (hi - lo) / n_per_axis;
  const double cell = h.prod();
  const long total = d == 1 ? n_per_axis : static_cast<long>(n_per_axis) * n_per_axis;
  std::vector<double> u(static_cast<std::size_t>(total));
  Vec x(d);
  for (long k = 0; k < total; ++k) {
    x[0] = lo[0] + (static_cast<double>(k % n_per_axis) + 0.5) * h[0];
    if (d == 2) x[1] = lo[1] + (static_cast<double>(k / n_per_axis) + 0.5) * h[1];
    u[static_cast<std::size_t>(k)] = p.energy(x);
  }
  const double u_min = *std::min_element(u.begin(), u.end());
  double z = 0.0;
  for (double v : u) z += std::exp(-(v - u_min)) * cell;
  ReferenceDensity ref;
  ref.pdf = [p, u_min, z](const Vec& y) { return std::exp(-(p.energy(y) - u_min)) / z; };
  ref.label = "exp(-U) " + p.label();
  return ref;
}

BinSpec gaussian_bins(const Mat& covariance, int bins_per_axis, double n_sd) {
  BinSpec spec;
  for (Eigen::Index i = 0; i < covariance.rows(); ++i) {
    const double sd = std::sqrt(covariance(i, i));
    spec.axes.push_back({-n_sd * sd, n_sd * sd, bins_per_axis});
  }
  return spec;
}

namespace {

void check_bins(const BinSpec& bins) {
  if (bins.axes.empty() || bins.axes.size() > 2) throw InvalidArgument("bins need one or two axes");
  for (const auto& a : bins.axes)
    if (a.n < 1 || !(a.hi > a.lo)) throw InvalidArgument("each bin axis needs n >= 1 and hi > lo");
}

// Flat bin of x, or -1 when outside the binned range.
long bin_of(const BinSpec& bins, const double* x, Eigen::Index stride) {
  long flat = 0;
  long mult = 1;
  for (std::size_t a = 0; a < bins.axes.size(); ++a) {
    const auto& ax = bins.axes[a];
    const double v = x[static_cast<Eigen::Index>(a) * stride];
    const double pos = (v - ax.lo) / (ax.hi - ax.lo) * ax.n;
    if (!(pos >= 0.0) || pos >= ax.n) return -1;
    flat += mult * static_cast<long>(pos);
    mult *= ax.n;
  }
  return flat;
}

std::vector<long> histogram(const Mat& samples, const BinSpec& bins, Eigen::Index row_lo, Eigen::Index row_hi,
                            long& outside) {
  std::vector<long> counts(static_cast<std::size_t>(bins.total()), 0);
  outside = 0;
  for (Eigen::Index r = row_lo; r < row_hi; ++r) {
    const long b = bin_of(bins, &samples(r, 0), samples.rows());
    if (b < 0) {
      ++outside;
    } else {
      ++counts[static_cast<std::size_t>(b)];
    }
  }
  return counts;
}

}  // namespace

std::vector<double> bin_masses(const ReferenceDensity& ref, const BinSpec& bins) {
  check_bins(bins);
  constexpr int kRefine = 4;
  const int d = bins.dim();
  std::vector<double> out(static_cast<std::size_t>(bins.total()), 0.0);
  Vec x(d);
  const auto& ax = bins.axes[0];
  const double hx = (ax.hi - ax.lo) / ax.n / kRefine;
  if (d == 1) {
    for (int b = 0; b < ax.n; ++b) {
      double m = 0.0;
      for (int s = 0; s < kRefine; ++s) {
        x[0] = ax.lo + ((b * kRefine + s) + 0.5) * hx;
        m += ref.pdf(x);
      }
      out[static_cast<std::size_t>(b)] = m * hx;
    }
    return out;
  }
  const auto& ay = bins.axes[1];
  const double hy = (ay.hi - ay.lo) / ay.n / kRefine;
  for (int by = 0; by < ay.n; ++by)
    for (int bx = 0; bx < ax.n; ++bx) {
      double m = 0.0;
      for (int sy = 0; sy < kRefine; ++sy)
        for (int sx = 0; sx < kRefine; ++sx) {
          x[0] = ax.lo + ((bx * kRefine + sx) + 0.5) * hx;
          x[1] = ay.lo + ((by * kRefine + sy) + 0.5) * hy;
          m += ref.pdf(x);
        }
      out[static_cast<std::size_t>(bx + ax.n * by)] = m * hx * hy;
    }
  return out;
}

double tv_distance(const Mat& samples, std::span<const double> reference_masses, const BinSpec& bins) {
  check_bins(bins);
  if (samples.rows() == 0) throw InvalidArgument("no samples");
  if (samples.cols() != bins.dim()) throw InvalidArgument("sample dimension does not match bins");
  if (static_cast<long>(reference_masses.size()) != bins.total())
    throw InvalidArgument("reference mass count does not match bins");
  long outside = 0;
  const auto counts = histogram(samples, bins, 0, samples.rows(), outside);
  const double n = static_cast<double>(samples.rows());
  double acc = 0.0;
  double covered = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    acc += std::abs(static_cast<double>(counts[b]) / n - reference_masses[b]);
    covered += reference_masses[b];
  }
  acc += std::abs(static_cast<double>(outside) / n - std::max(0.0, 1.0 - covered));
  return 0.5 * acc;
}

double split_half_tv(const Mat& samples, const BinSpec& bins) {
  check_bins(bins);
  const Eigen::Index half = samples.rows() / 2;
  if (half < 1) throw InvalidArgument("need at least two samples for a split-half TV");
  long out_a = 0, out_b = 0;
  const auto a = histogram(samples, bins, 0, half, out_a);
  const auto b = histogram(samples, bins, half, 2 * half, out_b);
  const double n = static_cast<double>(half);
  double acc = std::abs(static_cast<double>(out_a - out_b)) / n;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(static_cast<double>(a[k] - b[k])) / n;
  return 0.5 * acc;
}

TVCurve estimate_tv(const SampleBatch& batch, const ReferenceDensity& reference, const BinSpec& bins) {
  check_bins(bins);
  if (batch.snapshots.empty() || batch.n_chains() == 0) throw InvalidArgument("empty sample batch");
  if (batch.dim() != bins.dim()) throw InvalidArgument("batch dimension does not match bins");
  const auto masses = bin_masses(reference, bins);
  double covered = 0.0;
  for (double m : masses) covered += m;
  if (covered < 1.0 - 1e-4) {
    std::ostringstream os;
    os << "bins cover only " << covered << " of the reference mass (need >= 1 - 1e-4)";
    throw InvalidArgument(os.str());
  }

  TVCurve curve;
  curve.n_chains = batch.n_chains();
  curve.bins = bins;
  const double recommended = 100.0 * std::sqrt(static_cast<double>(bins.total()));
  if (curve.n_chains < recommended) {
    std::ostringstream os;
    os << "only " << curve.n_chains << " chains for " << bins.total() << " bins (recommended >= "
       << recommended << ")";
    curve.warnings.push_back(os.str());
  }
  for (std::size_t k = 0; k < batch.snapshots.size(); ++k) {
    curve.times.push_back(batch.times[k]);
    curve.tv.push_back(std::clamp(tv_distance(batch.snapshots[k], masses, bins), 0.0, 1.0));
  }
  curve.noise_floor = split_half_tv(batch.snapshots.back(), bins);
  return curve;
}

RateFit fit_rate(const TVCurve& curve, double noise_floor) {
  if (curve.times.size() != curve.tv.size()) throw InvalidArgument("curve times and values differ in length");
  std::vector<double> t, y;
  for (std::size_t k = 0; k < curve.tv.size(); ++k) {
    const double v = curve.tv[k];
    if (v > noise_floor && v < 0.9 && v > 0.0) {
      t.push_back(curve.times[k]);
      y.push_back(std::log(v));
    }
  }
  if (t.size() < 4) {
    std::ostringstream os;
    os << "only " << t.size() << " TV values between the noise floor " << noise_floor
       << " and 0.9; run longer, snapshot more often or use more chains";
    throw FitError(os.str());
  }
  const auto n = static_cast<double>(t.size());
  double t_mean = 0.0, y_mean = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    t_mean += t[k];
    y_mean += y[k];
  }
  t_mean /= n;
  y_mean /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double dt = t[k] - t_mean;
    const double dy = y[k] - y_mean;
    sxx += dt * dt;
    sxy += dt * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("fit window has a single distinct time");

  RateFit fit;
  fit.rate = sxy / sxx;
  const double intercept = y_mean - fit.rate * t_mean;
  fit.prefactor = std::exp(intercept);
  double ss_res = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double r = y[k] - (intercept + fit.rate * t[k]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 0.0;
  fit.t_lo = *std::min_element(t.begin(), t.end());
  fit.t_hi = *std::max_element(t.begin(), t.end());
  fit.n_points = static_cast<int>(t.size());
  fit.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  fit.ci_half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * fit.slope_stderr;
  return fit;
}

Autocorrelation integrated_autocorrelation(std::span<const double> series, double c) {
  const std::size_t n = series.size();
  if (n < 100) throw InvalidArgument("autocorrelation needs at least 100 values");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> x(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = series[i] - mean;
    c0 += x[i] * x[i];
  }
  if (!(c0 > 0.0)) throw InvalidArgument("series has zero variance");

  Autocorrelation out;
  double tau = 1.0;
  std::size_t k = 1;
  for (; k < n; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += x[i] * x[i + k];
    tau += 2.0 * ck / c0;
    if (static_cast<double>(k) >= c * tau) break;
  }
  out.tau_int = tau;
  out.window = static_cast<int>(std::min(k, n - 1));
  out.ess = static_cast<double>(n) / tau;
  return out;
}

ComparisonReport compare(const Potential& p, const std::vector<DriftField>& drifts, const IntegratorConfig& cfg,
                         const CompareOptions& options) {
  if (drifts.empty() || drifts.front().kind() != DriftKind::zero)
    throw InvalidArgument("the first drift must be the zero drift (reversible baseline)");
  const auto& gauss = p.traits().gaussian_matrix;
  const bool ou_route = gauss && std::all_of(drifts.begin(), drifts.end(), [](const DriftField& c) {
                          return c.kind() == DriftKind::zero || c.kind() == DriftKind::skew_grad;
                        });
  if (!ou_route && !options.grid) throw InvalidArgument("a grid is needed to compute gaps for these drifts");

  BinSpec bins;
  if (options.bins) {
    bins = *options.bins;
  } else if (gauss) {
    bins = gaussian_bins(stationary_covariance(*gauss), p.dim() == 1 ? 64 : 32);
  } else {
    throw InvalidArgument("bins must be given for non-Gaussian potentials");
  }
  ReferenceDensity reference;
  if (options.reference) {
    reference = *options.reference;
  } else if (gauss) {
    reference = ReferenceDensity::gaussian(stationary_covariance(*gauss));
  } else {
    Vec lo(bins.dim()), hi(bins.dim());
    for (int a = 0; a < bins.dim(); ++a) {
      lo[a] = bins.axes[static_cast<std::size_t>(a)].lo;
      hi[a] = bins.axes[static_cast<std::size_t>(a)].hi;
    }
    reference = ReferenceDensity::from_potential(p, lo, hi, p.dim() == 1 ? 4000 : 400);
  }

  ComparisonReport report;
  report.potential_label = p.label();
  for (std::size_t i = 0; i < drifts.size(); ++i) {
    const auto& c = drifts[i];
    ComparisonEntry e;
    e.label = c.label();
    if (ou_route) {
      const SkewMatrix s = c.kind() == DriftKind::zero ? SkewMatrix::zero(p.dim()) : *c.skew();
      e.gap = spectral_abscissa(ou_drift_matrix(*gauss, s));
      e.gap_source = "ou_exact";
    } else {
      e.gap = spectral_gap(discretize_generator(p, c, *options.grid), options.spectrum).gap;
      e.gap_source = "spectrum";
    }
    IntegratorConfig run = cfg;
    run.master_seed = substream_seed(cfg.master_seed, i);
    e.seed = run.master_seed;
    const auto batch = simulate_chains(p, c, run);
    e.exploded = batch.exploded;
    e.curve = estimate_tv(batch, reference, bins);
    e.fit = fit_rate(e.curve, e.curve.noise_floor);
    report.entries.push_back(std::move(e));
  }

  auto describe = [&](const ComparisonEntry& e) {
    std::ostringstream os;
    os << e.label << ": gap from " << e.gap_source << "; rate from log-linear TV fit over [" << e.fit.t_lo
       << ", " << e.fit.t_hi << "] (" << e.fit.n_points << " points, " << e.curve.n_chains << " chains, floor "
       << e.curve.noise_floor << ")";
    return os.str();
  };

  const auto& base = report.entries.front();
  {
    OrderingFlag f{"rho_0 == gap_0", base.fit.rate, base.gap, base.fit.ci_half_width, false, describe(base)};
    f.holds = std::abs(f.lhs - f.rhs) <= f.tolerance;
    report.flags.push_back(f);
  }
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    if (i > 0) {
      OrderingFlag g{"gap_C <= gap_0 [" + e.label + "]", e.gap, base.gap, options.gap_tolerance, false,
                     describe(e)};
      g.holds = g.lhs <= g.rhs + g.tolerance;
      report.flags.push_back(g);
      OrderingFlag r{"rho_C <= rho_0 [" + e.label + "]", e.fit.rate, base.fit.rate,
                     std::hypot(e.fit.ci_half_width, base.fit.ci_half_width), false, describe(e)};
      r.holds = r.lhs <= r.rhs + r.tolerance;
      report.flags.push_back(r);
    }
    OrderingFlag q{"rho <= gap [" + e.label + "]", e.fit.rate, e.gap, e.fit.ci_half_width, false, describe(e)};
    q.holds = q.lhs <= q.rhs + q.tolerance;
    report.flags.push_back(q);
  }
  return report;
}

}  // namespace nonrev
