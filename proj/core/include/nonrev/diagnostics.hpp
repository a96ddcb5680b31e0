#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nonrev/drift.hpp"
#include "nonrev/integrate.hpp"
#include "nonrev/model.hpp"
#include "nonrev/spectrum.hpp"

namespace nonrev {

struct BinAxis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 1;
};

struct BinSpec {
  std::vector<BinAxis> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  long total() const;
};

/// A normalized probability density on R^d (or the torus).
struct ReferenceDensity {
  std::function<double(const Vec&)> pdf;
  std::string label;

  /// N(0, covariance).
  static ReferenceDensity gaussian(const Mat& covariance);
  /// exp(-U) normalized by midpoint quadrature over [lo, hi] with n cells
  /// per axis. The box must hold essentially all of the mass.
  static ReferenceDensity from_potential(const Potential& p, const Vec& lo, const Vec& hi, int n_per_axis);
};

/// Bins at +/- n_sd standard deviations of N(0, covariance) per axis.
BinSpec gaussian_bins(const Mat& covariance, int bins_per_axis, double n_sd = 6.0);

/// Reference probability of every bin, midpoint rule refined 4x per bin and
/// axis. Flattened with axis 0 fastest.
std::vector<double> bin_masses(const ReferenceDensity& ref, const BinSpec& bins);

struct TVCurve {
  std::vector<double> times;
  std::vector<double> tv;
  int n_chains = 0;
  BinSpec bins;
  double noise_floor = 0.0;  // split-half TV at the final snapshot
  std::vector<std::string> warnings;
};

/// 1/2 sum |empirical - reference| over the bins plus an overflow cell for
/// samples (and reference mass) outside the bin range.
double tv_distance(const Mat& samples, std::span<const double> reference_masses, const BinSpec& bins);

/// TV between the first and second halves of the rows of `samples`.
double split_half_tv(const Mat& samples, const BinSpec& bins);

/// TV against the reference at every snapshot of the batch.
TVCurve estimate_tv(const SampleBatch& batch, const ReferenceDensity& reference, const BinSpec& bins);

struct RateFit {
  double rate = 0.0;       // slope of log tv against t
  double prefactor = 0.0;  // exp(intercept)
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int n_points = 0;
  double slope_stderr = 0.0;
  double ci_half_width = 0.0;  // 95% Student-t interval on the rate
};

/// Least squares on log(tv) over points with noise_floor < tv < 0.9.
RateFit fit_rate(const TVCurve& curve, double noise_floor);

struct Autocorrelation {
  double tau_int = 1.0;
  double ess = 0.0;
  int window = 0;
};

/// tau = 1 + 2 sum_{k <= K} rho_k with the smallest K >= c * tau(K).
Autocorrelation integrated_autocorrelation(std::span<const double> series, double c = 6.0);

/// A boolean verdict together with the numbers and tolerance behind it.
struct OrderingFlag {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool holds = false;
  std::string provenance;
};

struct ComparisonEntry {
  std::string label;
  double gap = 0.0;
  std::string gap_source;  // "ou_exact" or "spectrum"
  RateFit fit;
  TVCurve curve;
  int exploded = 0;
  std::uint64_t seed = 0;
};

struct ComparisonReport {
  std::string potential_label;
  std::vector<ComparisonEntry> entries;  // entries[0] is the reversible baseline
  std::vector<OrderingFlag> flags;
};

struct CompareOptions {
  std::optional<BinSpec> bins;                 // default: gaussian_bins for Gaussian potentials
  std::optional<ReferenceDensity> reference;   // default: exact Gaussian
  std::optional<Grid> grid;                    // needed unless the OU route applies
  SpectrumOptions spectrum;
  double gap_tolerance = 1e-10;
};

/// For every drift: the gap (exact OU route for Gaussian U with zero/skew
/// drifts, grid spectrum otherwise) and the simulate -> TV -> fit pipeline.
/// drifts[0] must be the zero drift. Chains of drift i use master seed
/// substream_seed(cfg.master_seed, i).
ComparisonReport compare(const Potential& p, const std::vector<DriftField>& drifts,
                         const IntegratorConfig& cfg, const CompareOptions& options = {});

}  // namespace nonrev
