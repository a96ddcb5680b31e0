#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "nonrev/drift.hpp"
#include "nonrev/model.hpp"

namespace nonrev {

struct InitialPoint {
  Vec x0;
};

/// Each chain starts uniformly in the cube center +/- radius, drawn from its
/// own noise substream.
struct InitialSpread {
  Vec center;
  double radius = 1.0;
};

using InitialCondition = std::variant<InitialPoint, InitialSpread>;

struct IntegratorConfig {
  double step = 1e-3;
  long n_steps = 0;
  std::vector<double> snapshot_times;
  int n_chains = 1;
  std::uint64_t master_seed = 0;
  InitialCondition initial = InitialPoint{};
  double explosion_radius = 1e6;
  int n_threads = 0;  // 0: hardware concurrency

  double horizon() const { return step * static_cast<double>(n_steps); }
  void validate(int dim) const;
  // Step index recorded for each snapshot: the last step boundary not after t.
  std::vector<long> snapshot_steps() const;
};

/// Snapshots of every chain; snapshots[k] is n_chains x dim at times[k].
struct SampleBatch {
  std::vector<double> times;
  std::vector<Mat> snapshots;
  IntegratorConfig config;
  int exploded = 0;
  std::optional<double> first_explosion_time;

  int n_chains() const { return snapshots.empty() ? 0 : static_cast<int>(snapshots.front().rows()); }
  int dim() const { return snapshots.empty() ? 0 : static_cast<int>(snapshots.front().cols()); }
};

/// One chain's snapshot states (one row per snapshot time).
struct ChainTrajectory {
  Mat states;
  std::optional<double> explosion_time;
};

/// x + (-grad U(x) + C(x)) h + sqrt(2h) xi, wrapped onto the torus when the
/// potential lives there. Throws ExplosionError on a non-finite result.
Vec em_step(const Vec& x, const Potential& p, const DriftField& c, double h, const Vec& xi);

/// Runs chain `index` alone; identical to its rows inside simulate_chains.
ChainTrajectory simulate_chain(const Potential& p, const DriftField& c,
                               const IntegratorConfig& cfg, int index);

/// Runs cfg.n_chains independent Euler-Maruyama chains. Chains whose norm
/// exceeds the explosion radius are frozen and counted; if every chain
/// explodes an ExplosionError carries the earliest explosion time.
SampleBatch simulate_chains(const Potential& p, const DriftField& c, const IntegratorConfig& cfg);

}  // namespace nonrev
