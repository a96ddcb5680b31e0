#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nonrev/diagnostics.hpp"
#include "nonrev/errors.hpp"
#include "nonrev/ou_exact.hpp"
#include "nonrev/rng.hpp"
#include "nonrev/spectrum.hpp"
#include "nonrev/version.hpp"
#include "report.hpp"

namespace nonrev::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + fmt(v[i]);
  return out;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + v[i];
  return out;
}

// ---------------------------------------------------------------- model setup

struct Setup {
  std::optional<Potential> potential;
  std::optional<Mat> d;  // Gaussian case
  std::vector<GridAxis> box;
  BinSpec bins;
  Vec x0;
};

int square_dim(std::size_t n, const char* what) {
  const auto k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (k < 1 || static_cast<std::size_t>(k * k) != n)
    throw UsageError(std::string(what) + " needs dim*dim row-major entries");
  return k;
}

Mat gaussian_matrix(const RunConfig& c) {
  if (!c.d_matrix.empty() && !c.d_diag.empty()) throw UsageError("give either --d-diag or --d-matrix, not both");
  if (!c.d_matrix.empty()) {
    const int k = square_dim(c.d_matrix.size(), "--d-matrix");
    Mat d(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) d(i, j) = c.d_matrix[static_cast<std::size_t>(i * k + j)];
    return d;
  }
  if (!c.d_diag.empty()) {
    Mat d = Mat::Zero(static_cast<Eigen::Index>(c.d_diag.size()), static_cast<Eigen::Index>(c.d_diag.size()));
    for (std::size_t i = 0; i < c.d_diag.size(); ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = c.d_diag[i];
    return d;
  }
  const int dim = c.dim > 0 ? c.dim : 2;
  if (c.command == "ou" || c.command == "scaling") {
    if (c.dim == 0) {
      Mat d = Mat::Zero(2, 2);
      d(0, 0) = -1.0;
      d(1, 1) = -4.0;
      return d;
    }
  }
  return -Mat::Identity(dim, dim);
}

std::vector<CosineTerm> parse_torus(const std::vector<std::string>& specs) {
  std::vector<CosineTerm> out;
  for (const auto& s : specs) {
    CosineTerm t;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> t.k1 >> c1 >> t.k2 >> c2 >> t.amplitude) || c1 != ':' || c2 != ':' || !is.eof())
      throw UsageError("torus coefficient '" + s + "' is not k1:k2:amplitude");
    out.push_back(t);
  }
  return out;
}

Setup build_setup(const RunConfig& c) {
  Setup s;
  if (c.potential == "gauss") {
    const Mat d = validate_negative_definite(gaussian_matrix(c));
    s.d = d;
    s.potential = potential_gaussian(d);
    const Mat cov = stationary_covariance(d);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      const double sd = std::sqrt(cov(i, i));
      s.box.push_back({-6.0 * sd, 6.0 * sd, 0, false});
    }
    // Two standard deviations out, alternating sign. With C = S grad U the
    // planar rotation then carries the start straight into the bulk.
    s.x0 = 2.0 * cov.diagonal().cwiseSqrt();
    for (Eigen::Index i = 1; i < s.x0.size(); i += 2) s.x0[i] = -s.x0[i];
  } else if (c.potential == "double-well" || c.potential == "double-well-2d") {
    if (!(c.a > 0.0)) throw UsageError("--a must be positive");
    const double reach = std::sqrt(1.0 + std::sqrt(30.0 / c.a));
    s.box.push_back({-reach, reach, 0, false});
    if (c.potential == "double-well") {
      s.potential = potential_double_well(c.a);
      s.x0 = Vec::Constant(1, -1.0);
    } else {
      s.potential = potential_double_well_2d(c.a);
      s.box.push_back({-6.0, 6.0, 0, false});
      s.x0 = Vec::Zero(2);
      s.x0[0] = -1.0;
    }
  } else if (c.potential == "torus") {
    s.potential = potential_torus(parse_torus(c.torus_coeffs));
    s.box = {{0.0, kTwoPi, 0, true}, {0.0, kTwoPi, 0, true}};
    s.x0 = Vec::Ones(2);
  } else {
    throw UsageError("unknown potential '" + c.potential + "' (gauss, double-well, double-well-2d, torus)");
  }
  const int dim = s.potential->dim();
  if (c.dim > 0 && c.dim != dim) throw UsageError("--dim does not match the potential");

  if (!c.box.empty()) {
    if (c.potential == "torus") throw UsageError("--box does not apply to the torus");
    if (c.box.size() != 2u * static_cast<std::size_t>(dim)) throw UsageError("--box needs lo,hi for every axis");
    for (int a = 0; a < dim; ++a) {
      s.box[static_cast<std::size_t>(a)].lo = c.box[2 * static_cast<std::size_t>(a)];
      s.box[static_cast<std::size_t>(a)].hi = c.box[2 * static_cast<std::size_t>(a) + 1];
    }
  }
  const int per_axis = c.grid > 0 ? c.grid : (c.potential == "torus" ? 32 : (dim == 1 ? 256 : 96));
  for (auto& ax : s.box) ax.n = per_axis;

  const int nb = c.bins > 0 ? c.bins : (dim == 1 ? 64 : 32);
  for (const auto& ax : s.box) s.bins.axes.push_back({ax.lo, ax.hi, nb});

  if (!c.x0.empty()) {
    if (c.x0.size() != static_cast<std::size_t>(dim)) throw UsageError("--x0 has the wrong dimension");
    s.x0 = Eigen::Map<const Vec>(c.x0.data(), dim);
  }
  return s;
}

Grid make_grid(const Setup& s) {
  if (s.box.size() == 2 && s.box[0].periodic) return Grid::torus2d(s.box[0].n, kTwoPi);
  return Grid(s.box);
}

SkewMatrix skew_for(const RunConfig& c, int dim) {
  if (!c.skew_matrix.empty()) {
    const int k = square_dim(c.skew_matrix.size(), "--skew-matrix");
    if (k != dim) throw UsageError("--skew-matrix dimension does not match the potential");
    Mat m(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = c.skew_matrix[static_cast<std::size_t>(i * k + j)];
    return SkewMatrix(m);
  }
  if (dim != 2) throw UsageError("--skew builds a planar matrix; give --skew-matrix for dimension " + std::to_string(dim));
  return SkewMatrix::planar(c.skew);
}

// Zero drift first, then the requested ones, each expanded over --ks.
std::vector<DriftField> build_drifts(const RunConfig& c, const Setup& s, std::vector<std::string> defaults) {
  const Potential& p = *s.potential;
  std::vector<std::string> kinds = c.drifts.empty() ? std::move(defaults) : c.drifts;
  std::vector<DriftField> out{drift_zero(p.dim())};
  for (const auto& kind : kinds) {
    std::optional<DriftField> base;
    if (kind == "zero") {
      continue;
    } else if (kind == "skew") {
      base = drift_skew_grad(skew_for(c, p.dim()), p);
    } else if (kind == "stream") {
      if (!p.domain().is_torus()) throw UsageError("stream drifts need --potential=torus");
      base = drift_stream_2d(stream_sine_products({{1, 1, c.stream_amp}}), p);
    } else {
      throw UsageError("unknown drift '" + kind + "' (zero, skew, stream)");
    }
    if (c.ks.empty()) {
      out.push_back(*base);
    } else {
      for (double k : c.ks) out.push_back(base->scaled(k));
    }
  }
  return out;
}

IntegratorConfig build_integrator(const RunConfig& c, const Setup& s, std::vector<double> default_snapshots,
                                  int default_chains) {
  IntegratorConfig cfg;
  cfg.step = c.h > 0.0 ? c.h : (c.potential.rfind("double-well", 0) == 0 ? 1e-4 : 1e-3);
  cfg.snapshot_times = c.snapshots.empty() ? std::move(default_snapshots) : c.snapshots;
  if (cfg.snapshot_times.empty()) throw UsageError("no snapshot times");
  const double t_max = *std::max_element(cfg.snapshot_times.begin(), cfg.snapshot_times.end());
  cfg.n_steps = c.steps > 0 ? c.steps : static_cast<long>(std::ceil(t_max / cfg.step - 1e-9));
  cfg.n_chains = c.chains > 0 ? c.chains : default_chains;
  cfg.master_seed = c.seed;
  cfg.n_threads = c.threads;
  if (c.spread > 0.0) {
    cfg.initial = InitialSpread{s.x0, c.spread};
  } else {
    cfg.initial = InitialPoint{s.x0};
  }
  return cfg;
}

std::vector<double> time_grid(double dt, int count) {
  std::vector<double> out;
  for (int i = 1; i <= count; ++i) out.push_back(std::round(dt * i * 1e12) / 1e12);
  return out;
}

ReferenceDensity reference_for(const Setup& s) {
  if (s.d) return ReferenceDensity::gaussian(stationary_covariance(*s.d));
  Vec lo(s.bins.dim()), hi(s.bins.dim());
  for (int a = 0; a < s.bins.dim(); ++a) {
    lo[a] = s.bins.axes[static_cast<std::size_t>(a)].lo;
    hi[a] = s.bins.axes[static_cast<std::size_t>(a)].hi;
  }
  return ReferenceDensity::from_potential(*s.potential, lo, hi, s.bins.dim() == 1 ? 4000 : 400);
}

// ---------------------------------------------------------------- outputs

struct Output {
  std::string name;
  std::string content;
};

struct Result {
  std::vector<Output> files;
  std::vector<std::string> summary;
  std::vector<std::string> warnings;
};

std::string provenance(const RunConfig& c) {
  std::ostringstream os;
  os << "seed=" << c.seed << ", version=" << kVersion << ", config-hash=" << std::hex << std::setw(16)
     << std::setfill('0') << fnv1a(c.canonical());
  return os.str();
}

std::string bool_cell(bool b) { return b ? "true" : "false"; }

Result run_ou(const RunConfig& c) {
  if (c.potential != "gauss") throw UsageError("ou needs --potential=gauss");
  const Mat d = validate_negative_definite(gaussian_matrix(c));
  const SkewMatrix s = skew_for(c, static_cast<int>(d.rows()));
  const std::vector<double> ks = c.ks.empty() ? std::vector<double>{1.0} : c.ks;
  const double reversible = Eigen::SelfAdjointEigenSolver<Mat>(d).eigenvalues().maxCoeff();
  const auto pts = scaling_study(d, s, ks);
  CsvTable t({"k", "abscissa", "reversible_abscissa"});
  Result r;
  for (const auto& pt : pts) {
    t.add_row({fmt(pt.k), fmt(pt.abscissa), fmt(reversible)});
    r.summary.push_back("k=" + fmt(pt.k) + " abscissa=" + fmt(pt.abscissa) + " reversible=" + fmt(reversible));
  }
  r.files.push_back({"ou.csv", t.render(provenance(c))});
  if (c.plot) {
    PlotSeries a{"abscissa((I+kS)D)", {}, {}, false, true}, b{"reversible", {}, {}, true, false};
    for (const auto& pt : pts) {
      a.x.push_back(pt.k);
      a.y.push_back(pt.abscissa);
      b.x.push_back(pt.k);
      b.y.push_back(reversible);
    }
    r.files.push_back({"ou.svg", render_svg({"OU drift spectral abscissa", "k", "abscissa", false}, {a, b})});
  }
  return r;
}

Result run_scaling(const RunConfig& c) {
  if (c.potential != "gauss") throw UsageError("scaling needs --potential=gauss");
  const Mat d = validate_negative_definite(gaussian_matrix(c));
  const SkewMatrix s = skew_for(c, static_cast<int>(d.rows()));
  const std::vector<double> ks = c.ks.empty() ? std::vector<double>{0, 0.25, 0.5, 0.75, 1, 2, 8} : c.ks;
  const auto pts = scaling_study(d, s, ks);
  CsvTable t({"k", "abscissa"});
  Result r;
  PlotSeries a{"abscissa((I+kS)D)", {}, {}, false, true};
  for (const auto& pt : pts) {
    t.add_row({fmt(pt.k), fmt(pt.abscissa)});
    a.x.push_back(pt.k);
    a.y.push_back(pt.abscissa);
    r.summary.push_back("k=" + fmt(pt.k) + " abscissa=" + fmt(pt.abscissa) +
                        " eigvec_condition=" + fmt(pt.eigvec_condition));
  }
  r.files.push_back({"scaling.csv", t.render(provenance(c))});
  if (c.plot) r.files.push_back({"scaling.svg", render_svg({"Drift scaling study", "k", "abscissa", false}, {a})});
  return r;
}

std::vector<std::string> default_drifts(const Setup& s) {
  if (s.potential->domain().is_torus()) return {"stream"};
  if (s.potential->dim() >= 2) return {"skew"};
  return {};
}

Result run_spectrum(const RunConfig& c) {
  const Setup s = build_setup(c);
  const auto drifts = build_drifts(c, s, default_drifts(s));
  const Grid grid = make_grid(s);
  CsvTable t({"label", "gap", "kernel_dim", "grid_n"});
  Result r;
  for (const auto& drift : drifts) {
    const auto res = spectral_gap(discretize_generator(*s.potential, drift, grid));
    t.add_row({drift.label(), fmt(res.gap), std::to_string(res.kernel_dim), std::to_string(grid.axis(0).n)});
    r.summary.push_back(drift.label() + ": gap=" + fmt(res.gap) + " kernel_dim=" + std::to_string(res.kernel_dim) +
                        " (" + res.method + ", " + std::to_string(grid.size()) + " points)");
  }
  r.files.push_back({"spectrum.csv", t.render(provenance(c))});
  return r;
}

Result run_sample(const RunConfig& c) {
  const Setup s = build_setup(c);
  const auto drifts = build_drifts(c, s, {});
  const auto cfg = build_integrator(c, s, {0.0, 0.5, 1.0, 2.0, 5.0}, 2000);
  const int dim = s.potential->dim();
  std::vector<std::string> header{"label", "t"};
  for (int i = 1; i <= dim; ++i) header.push_back("mean_" + std::to_string(i));
  for (int i = 1; i <= dim; ++i)
    for (int j = i; j <= dim; ++j) header.push_back("cov_" + std::to_string(i) + std::to_string(j));
  header.push_back("exploded");
  CsvTable t(header);
  Result r;
  for (std::size_t k = 0; k < drifts.size(); ++k) {
    IntegratorConfig run = cfg;
    run.master_seed = substream_seed(cfg.master_seed, k);
    const auto batch = simulate_chains(*s.potential, drifts[k], run);
    for (std::size_t i = 0; i < batch.times.size(); ++i) {
      const Mat& x = batch.snapshots[i];
      const Vec mean = x.colwise().mean();
      const Mat centered = x.rowwise() - mean.transpose();
      const Mat cov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(x.rows() - 1));
      std::vector<std::string> row{drifts[k].label(), fmt(batch.times[i])};
      for (int a = 0; a < dim; ++a) row.push_back(fmt(mean[a]));
      for (int a = 0; a < dim; ++a)
        for (int b = a; b < dim; ++b) row.push_back(fmt(cov(a, b)));
      row.push_back(std::to_string(batch.exploded));
      t.add_row(std::move(row));
    }
    r.summary.push_back(drifts[k].label() + ": " + std::to_string(batch.n_chains()) + " chains, " +
                        std::to_string(batch.exploded) + " exploded");
  }
  r.files.push_back({"sample.csv", t.render(provenance(c))});
  return r;
}

Result run_compare(const RunConfig& c) {
  const Setup s = build_setup(c);
  const auto drifts = build_drifts(c, s, default_drifts(s));
  const auto cfg = build_integrator(c, s, time_grid(0.1, 30), 20000);
  CompareOptions opt;
  opt.bins = s.bins;
  opt.reference = reference_for(s);
  opt.grid = make_grid(s);
  const auto report = compare(*s.potential, drifts, cfg, opt);

  CsvTable t({"label", "gap", "rho_hat", "rho_ci", "g_hat", "r_squared", "fit_t_lo", "fit_t_hi", "noise_floor",
              "gap_le_gap0", "rho_le_rho0", "rho_le_gap", "rho0_eq_gap0"});
  CsvTable flags({"name", "lhs", "rhs", "tolerance", "holds", "provenance"});
  CsvTable tv({"label", "t", "tv"});
  auto flag_for = [&](const std::string& prefix, const std::string& label) -> std::string {
    for (const auto& f : report.flags)
      if (f.name == prefix + " [" + label + "]" || (label.empty() && f.name == prefix)) return bool_cell(f.holds);
    return "";
  };
  Result r;
  std::vector<PlotSeries> plot;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    t.add_row({e.label, fmt(e.gap), fmt(e.fit.rate), fmt(e.fit.ci_half_width), fmt(e.fit.prefactor),
               fmt(e.fit.r_squared), fmt(e.fit.t_lo), fmt(e.fit.t_hi), fmt(e.curve.noise_floor),
               i ? flag_for("gap_C <= gap_0", e.label) : "", i ? flag_for("rho_C <= rho_0", e.label) : "",
               flag_for("rho <= gap", e.label), i ? "" : flag_for("rho_0 == gap_0", "")});
    PlotSeries curve{e.label, e.curve.times, e.curve.tv, false, true};
    PlotSeries line{e.label + " fit", {}, {}, true, false};
    for (double tt : {e.fit.t_lo, e.fit.t_hi}) {
      line.x.push_back(tt);
      line.y.push_back(e.fit.prefactor * std::exp(e.fit.rate * tt));
    }
    plot.push_back(curve);
    plot.push_back(line);
    for (std::size_t k = 0; k < e.curve.times.size(); ++k) tv.add_row({e.label, fmt(e.curve.times[k]), fmt(e.curve.tv[k])});
    for (const auto& w : e.curve.warnings) r.warnings.push_back(e.label + ": " + w);
    if (e.exploded > 0) r.warnings.push_back(e.label + ": " + std::to_string(e.exploded) + " chains exploded");
    r.summary.push_back(e.label + ": gap=" + fmt(e.gap) + " rho_hat=" + fmt(e.fit.rate) + " +/- " +
                        fmt(e.fit.ci_half_width) + " (r^2=" + fmt(e.fit.r_squared) + ")");
  }
  for (const auto& f : report.flags) {
    flags.add_row({f.name, fmt(f.lhs), fmt(f.rhs), fmt(f.tolerance), bool_cell(f.holds), f.provenance});
    r.summary.push_back(std::string(f.holds ? "holds: " : "FAILS: ") + f.name + " (" + fmt(f.lhs) + " vs " +
                        fmt(f.rhs) + ", tol " + fmt(f.tolerance) + ")");
  }
  const std::string prov = provenance(c);
  r.files.push_back({"compare.csv", t.render(prov)});
  r.files.push_back({"compare_flags.csv", flags.render(prov)});
  r.files.push_back({"compare_tv.csv", tv.render(prov)});
  if (c.plot)
    r.files.push_back({"compare_tv.svg", render_svg({"TV distance to equilibrium", "t", "TV", true}, plot)});
  return r;
}

// ---------------------------------------------------------------- parsing

void emit_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  err << j.dump() << '\n';
}

}  // namespace

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["command"] = command;
  kv["potential"] = potential;
  kv["d-diag"] = join_doubles(d_diag);
  kv["d-matrix"] = join_doubles(d_matrix);
  kv["a"] = fmt(a);
  kv["dim"] = std::to_string(dim);
  kv["torus-coeffs"] = join_strings(torus_coeffs);
  kv["drift"] = join_strings(drifts);
  kv["skew"] = fmt(skew);
  kv["skew-matrix"] = join_doubles(skew_matrix);
  kv["ks"] = join_doubles(ks);
  kv["stream-amp"] = fmt(stream_amp);
  kv["h"] = fmt(h);
  kv["steps"] = std::to_string(steps);
  kv["snapshots"] = join_doubles(snapshots);
  kv["chains"] = std::to_string(chains);
  kv["x0"] = join_doubles(x0);
  kv["spread"] = fmt(spread);
  kv["seed"] = std::to_string(seed);
  kv["grid"] = std::to_string(grid);
  kv["box"] = join_doubles(box);
  kv["bins"] = std::to_string(bins);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Reversible vs. nonreversible Langevin diffusions: spectral gaps, exact OU analysis and TV decay.",
               "nonrev"};
  app.set_help_flag("--help", "print this help and exit");  // -h would shadow --h
  app.add_option("command", c.command, "sample | spectrum | ou | scaling | compare")
      ->required()
      ->check(CLI::IsMember({"sample", "spectrum", "ou", "scaling", "compare"}));
  app.set_config("--config", "", "flat key=value file; keys are flag names, flags override it");
  app.add_option("--potential", c.potential, "gauss | double-well | double-well-2d | torus")->capture_default_str();
  app.add_option("--d-diag", c.d_diag, "diagonal of D (negative), e.g. -1,-4")->delimiter(',');
  app.add_option("--d-matrix", c.d_matrix, "D row-major, dim*dim entries")->delimiter(',');
  app.add_option("--a", c.a, "double-well height a")->capture_default_str();
  app.add_option("--dim", c.dim, "dimension when D is not given (D = -I)");
  app.add_option("--torus-coeffs", c.torus_coeffs, "cosine terms k1:k2:amplitude")->delimiter(',');
  app.add_option("--drift", c.drifts, "zero | skew | stream (list); the zero drift is always included")
      ->delimiter(',');
  app.add_option("--skew", c.skew, "s in S = [[0,s],[-s,0]]")->capture_default_str();
  app.add_option("--skew-matrix", c.skew_matrix, "S row-major, dim*dim entries")->delimiter(',');
  app.add_option("--ks", c.ks, "drift scale factors k")->delimiter(',');
  app.add_option("--stream-amp", c.stream_amp, "amplitude of psi = A sin x1 sin x2")->capture_default_str();
  app.add_option("--h", c.h, "Euler-Maruyama step");
  app.add_option("--steps", c.steps, "number of steps (default: up to the last snapshot)");
  app.add_option("--snapshots", c.snapshots, "snapshot times")->delimiter(',');
  app.add_option("--chains", c.chains, "number of chains");
  app.add_option("--x0", c.x0, "initial point")->delimiter(',');
  app.add_option("--spread", c.spread, "start uniformly in the cube x0 +/- spread");
  app.add_option("--seed", c.seed, "master seed (NONREV_SEED overrides)")->capture_default_str();
  app.add_option("--grid", c.grid, "grid points per axis");
  app.add_option("--box", c.box, "lo,hi per axis")->delimiter(',');
  app.add_option("--bins", c.bins, "TV bins per axis");
  app.add_option("--threads", c.threads, "worker threads for simulation (0: all cores)");
  app.add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  app.add_flag("--plot", c.plot, "also write SVG plots");
  app.set_version_flag("--version", std::string(kVersion));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  Result result;
  try {
    if (const char* env = std::getenv("NONREV_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        c.seed = std::stoull(env, &used, 0);
        if (env[used] != '\0') throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw UsageError(std::string("NONREV_SEED is not an unsigned integer: ") + env);
      }
    }
    if (c.command == "ou") {
      result = run_ou(c);
    } else if (c.command == "scaling") {
      result = run_scaling(c);
    } else if (c.command == "spectrum") {
      result = run_spectrum(c);
    } else if (c.command == "sample") {
      result = run_sample(c);
    } else {
      result = run_compare(c);
    }
  } catch (const UsageError& e) {
    emit_error(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    emit_error(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const ExplosionError& e) {
    emit_error(err, "explosion", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const KernelMultiplicityError& e) {
    emit_error(err, "kernel_multiplicity", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const FitError& e) {
    emit_error(err, "fit", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const std::exception& e) {
    emit_error(err, "numerical", e.what(), kExitNumerical);
    return kExitNumerical;
  }

  try {
    fs::create_directories(c.out_dir);
    for (const auto& f : result.files) write_file(fs::path(c.out_dir) / f.name, f.content);
  } catch (const std::exception& e) {
    emit_error(err, "io", e.what(), kExitUsage);
    return kExitUsage;
  }
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  for (const auto& line : result.summary) out << line << '\n';
  for (const auto& f : result.files) out << "wrote " << (fs::path(c.out_dir) / f.name).string() << '\n';
  return kExitOk;
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace nonrev::cli
