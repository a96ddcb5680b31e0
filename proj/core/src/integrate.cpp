#include "nonrev/integrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "nonrev/errors.hpp"
#include "nonrev/rng.hpp"

namespace nonrev {

void IntegratorConfig::validate(int dim) const {
  if (!(step > 0.0)) throw InvalidArgument("integrator step must be positive");
  if (n_steps < 0) throw InvalidArgument("step count must be non-negative");
  if (n_chains < 1) throw InvalidArgument("need at least one chain");
  if (!(explosion_radius > 0.0)) throw InvalidArgument("explosion radius must be positive");
  if (snapshot_times.empty()) throw InvalidArgument("need at least one snapshot time");
  const double t_max = horizon() * (1.0 + 1e-12);
  for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
    const double t = snapshot_times[k];
    if (!(t >= 0.0) || t > t_max)
      throw InvalidArgument("snapshot times must lie in [0, n_steps * step]");
    if (k > 0 && !(t > snapshot_times[k - 1]))
      throw InvalidArgument("snapshot times must be strictly increasing");
  }
  std::visit(
      [dim](const auto& init) {
        using T = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<T, InitialPoint>) {
          if (init.x0.size() != dim) throw InvalidArgument("initial point has the wrong dimension");
        } else {
          if (init.center.size() != dim) throw InvalidArgument("spread center has the wrong dimension");
          if (!(init.radius > 0.0)) throw InvalidArgument("spread radius must be positive");
        }
      },
      initial);
}

std::vector<long> IntegratorConfig::snapshot_steps() const {
  std::vector<long> out;
  out.reserve(snapshot_times.size());
  for (double t : snapshot_times) {
    // tolerance absorbs t = k*h represented slightly below k*h
    const auto s = static_cast<long>(std::floor(t / step + 1e-9));
    out.push_back(std::min(s, n_steps));
  }
  return out;
}

namespace {

struct Workspace {
  explicit Workspace(int d) : grad(d), drift(d), xi(d) {}
  Vec grad;
  Vec drift;
  Vec xi;
};

// In-place step; returns false when the state is no longer finite.
bool step_in_place(Vec& x, const Potential& p, const DriftField& c, double h, double noise_scale,
                   Workspace& ws) {
  p.gradient(x, ws.grad);
  c.eval(x, ws.drift);
  x.noalias() += h * (ws.drift - ws.grad) + noise_scale * ws.xi;
  if (!x.allFinite()) return false;
  p.domain().wrap(x);
  return true;
}

}  // namespace

Vec em_step(const Vec& x, const Potential& p, const DriftField& c, double h, const Vec& xi) {
  if (x.size() != p.dim() || c.dim() != p.dim() || xi.size() != p.dim())
    throw InvalidArgument("em_step dimension mismatch");
  if (!(h > 0.0)) throw InvalidArgument("em_step needs h > 0");
  Workspace ws(p.dim());
  ws.xi = xi;
  Vec out = x;
  if (!step_in_place(out, p, c, h, std::sqrt(2.0 * h), ws))
    throw ExplosionError("Euler-Maruyama step produced a non-finite state", h, 1);
  return out;
}

namespace {

ChainTrajectory run_chain(const Potential& p, const DriftField& c, const IntegratorConfig& cfg,
                          const std::vector<long>& snap_steps, int index) {
  const int d = p.dim();
  std::mt19937_64 rng(substream_seed(cfg.master_seed, static_cast<std::uint64_t>(index)));
  std::normal_distribution<double> normal;

  Vec x(d);
  if (const auto* pt = std::get_if<InitialPoint>(&cfg.initial)) {
    x = pt->x0;
  } else {
    const auto& spread = std::get<InitialSpread>(cfg.initial);
    std::uniform_real_distribution<double> unif(-spread.radius, spread.radius);
    for (int i = 0; i < d; ++i) x[i] = spread.center[i] + unif(rng);
  }
  p.domain().wrap(x);

  ChainTrajectory traj;
  traj.states.resize(static_cast<Eigen::Index>(snap_steps.size()), d);
  std::size_t next = 0;
  auto record_until = [&](long step) {
    while (next < snap_steps.size() && snap_steps[next] <= step) {
      traj.states.row(static_cast<Eigen::Index>(next)) = x.transpose();
      ++next;
    }
  };
  record_until(0);

  Workspace ws(d);
  Vec trial(d);
  const double h = cfg.step;
  const double noise_scale = std::sqrt(2.0 * h);
  const bool guard = !p.domain().is_torus();
  for (long s = 1; s <= cfg.n_steps && next < snap_steps.size(); ++s) {
    for (int i = 0; i < d; ++i) ws.xi[i] = normal(rng);
    trial = x;
    const bool finite = step_in_place(trial, p, c, h, noise_scale, ws);
    if (!finite || (guard && trial.norm() > cfg.explosion_radius)) {
      // frozen at the last state inside the guard
      traj.explosion_time = static_cast<double>(s) * h;
      break;
    }
    x.swap(trial);
    record_until(s);
  }
  record_until(cfg.n_steps);
  return traj;
}

}  // namespace

ChainTrajectory simulate_chain(const Potential& p, const DriftField& c, const IntegratorConfig& cfg,
                               int index) {
  if (c.dim() != p.dim()) throw InvalidArgument("drift and potential dimensions differ");
  cfg.validate(p.dim());
  if (index < 0 || index >= cfg.n_chains) throw InvalidArgument("chain index out of range");
  return run_chain(p, c, cfg, cfg.snapshot_steps(), index);
}

SampleBatch simulate_chains(const Potential& p, const DriftField& c, const IntegratorConfig& cfg) {
  if (c.dim() != p.dim()) throw InvalidArgument("drift and potential dimensions differ");
  cfg.validate(p.dim());
  const int d = p.dim();
  const auto snap_steps = cfg.snapshot_steps();
  const auto n_snap = static_cast<Eigen::Index>(snap_steps.size());

  SampleBatch batch;
  batch.config = cfg;
  for (long s : snap_steps) batch.times.push_back(static_cast<double>(s) * cfg.step);
  batch.snapshots.assign(static_cast<std::size_t>(n_snap), Mat(cfg.n_chains, d));
  std::vector<std::optional<double>> explosion(static_cast<std::size_t>(cfg.n_chains));

  std::atomic<int> cursor{0};
  auto worker = [&] {
    for (int i = cursor.fetch_add(1); i < cfg.n_chains; i = cursor.fetch_add(1)) {
      auto traj = run_chain(p, c, cfg, snap_steps, i);
      for (Eigen::Index k = 0; k < n_snap; ++k)
        batch.snapshots[static_cast<std::size_t>(k)].row(i) = traj.states.row(k);
      explosion[static_cast<std::size_t>(i)] = traj.explosion_time;
    }
  };
  int n_threads = cfg.n_threads > 0 ? cfg.n_threads
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, cfg.n_chains);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& e : explosion) {
    if (!e) continue;
    ++batch.exploded;
    if (!batch.first_explosion_time || *e < *batch.first_explosion_time) batch.first_explosion_time = e;
  }
  if (batch.exploded == cfg.n_chains) {
    std::ostringstream os;
    os << "all " << cfg.n_chains << " chains exploded; first explosion at t = "
       << *batch.first_explosion_time;
    throw ExplosionError(os.str(), *batch.first_explosion_time, batch.exploded);
  }
  return batch;
}

}  // namespace nonrev
