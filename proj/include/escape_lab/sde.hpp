#pragma once

// Euler-Maruyama integration of the noisy transformed-Hopf system with exit
// detection at the unit circle, winding tracking, and deterministic parallel
// ensembles.

#include <cmath>
#include <cstdint>
#include <thread>
#include <variant>
#include <vector>

#include "escape_lab/errors.hpp"
#include "escape_lab/field.hpp"
#include "escape_lab/rng.hpp"

namespace escape_lab {

struct UniformDiskInit {};

struct SimConfig {
  double dt = 1e-4;
  double t_max = 100.0;
  std::variant<PlanePoint, UniformDiskInit> init = PlanePoint{-0.8, 0.0};
  std::uint64_t seed = 0xC0FFEE;
  std::int64_t n_traj = 1;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (!(dt <= t_max)) throw std::invalid_argument("SimConfig: dt must be <= t_max");
    if (n_traj < 1) throw std::invalid_argument("SimConfig: n_traj must be >= 1");
  }
};

enum class TrajStatus { Exited, Censored };

struct ExitRecord {
  double exit_time = 0.0;
  double exit_angle = 0.0;  // NaN when censored
  std::int64_t winding_count = 0;
  TrajStatus status = TrajStatus::Censored;
  std::int64_t traj_index = 0;
};

/// One Euler-Maruyama step: state + b_alpha(state) dt + sqrt(2 eps dt) * noise.
inline PlanePoint em_step(PlanePoint state, double dt, PlanePoint noise, const FieldParams& p) {
  const PlanePoint b = drift_alpha(state, p);
  const double amp = std::sqrt(2.0 * p.eps * dt);
  return {state.x + b.x * dt + amp * noise.x, state.y + b.y * dt + amp * noise.y};
}

namespace detail {

// Signed crossing of the ray theta=pi for the move v0 -> v1 (both relative to
// the focus): +1 when the unwrapped angle passes +pi going up, -1 going down.
inline int cut_crossing(PlanePoint v0, PlanePoint v1) {
  if ((v0.y > 0.0) == (v1.y > 0.0)) return 0;
  const double dy = v1.y - v0.y;
  const double xc = v0.x + (v1.x - v0.x) * (0.0 - v0.y) / dy;
  if (xc >= 0.0) return 0;
  return v0.y > 0.0 ? 1 : -1;
}

inline std::int64_t winding_floor(double total_angle) {
  const std::int64_t w = static_cast<std::int64_t>(std::floor(total_angle / (2.0 * M_PI)));
  return w < 0 ? 0 : w;
}

inline PlanePoint draw_init(const SimConfig& cfg, Rng& rng) {
  if (std::holds_alternative<PlanePoint>(cfg.init)) {
    const PlanePoint z0 = std::get<PlanePoint>(cfg.init);
    if (z0.norm2() >= 1.0) throw InitOutsideDomain("simulate_to_exit: init outside the open unit disk");
    return z0;
  }
  for (;;) {  // rejection sampling of the uniform disk density
    const double x = 2.0 * rng.next_double() - 1.0;
    const double y = 2.0 * rng.next_double() - 1.0;
    if (x * x + y * y < 1.0) return {x, y};
  }
}

}  // namespace detail

/// Integrate one trajectory until |zeta|^2 >= 1 or t > t_max. Exit time and
/// angle are linearly interpolated in |zeta|^2 across the crossing step.
inline ExitRecord simulate_to_exit(const SimConfig& cfg, const FieldParams& p, Rng rng,
                                   std::int64_t traj_index = 0) {
  const PlanePoint focus = p.focus();
  PlanePoint z = detail::draw_init(cfg, rng);
  PlanePoint v = z - focus;
  const double theta_start = v.angle();
  std::int64_t cuts = 0;

  const double dt = cfg.dt;
  const double amp = std::sqrt(2.0 * p.eps * dt);
  const std::int64_t n_steps = static_cast<std::int64_t>(std::ceil(cfg.t_max / dt));

  ExitRecord rec;
  rec.traj_index = traj_index;
  for (std::int64_t k = 0; k < n_steps; ++k) {
    const PlanePoint b = drift_alpha(z, p);
    PlanePoint zn{z.x + b.x * dt + amp * rng.next_normal(),
                  z.y + b.y * dt + amp * rng.next_normal()};
    const double r2n = zn.norm2();
    if (r2n >= 1.0) {
      const double r2 = z.norm2();
      const double lam = (1.0 - r2) / (r2n - r2);
      const PlanePoint ze{z.x + (zn.x - z.x) * lam, z.y + (zn.y - z.y) * lam};
      const PlanePoint ve = ze - focus;
      cuts += detail::cut_crossing(v, ve);
      rec.exit_time = k * dt + lam * dt;
      rec.exit_angle = ze.angle();
      rec.winding_count =
          detail::winding_floor(2.0 * M_PI * cuts + ve.angle() - theta_start);
      rec.status = TrajStatus::Exited;
      return rec;
    }
    const PlanePoint vn = zn - focus;
    cuts += detail::cut_crossing(v, vn);
    z = zn;
    v = vn;
  }
  rec.exit_time = cfg.t_max;
  rec.exit_angle = std::nan("");
  rec.winding_count = detail::winding_floor(2.0 * M_PI * cuts + v.angle() - theta_start);
  rec.status = TrajStatus::Censored;
  return rec;
}

/// Run fn(i) for i in [0, n) over `threads` workers (0 = hardware concurrency).
/// Work is independent per index, so the partition does not affect results.
template <class Fn>
inline void parallel_for_index(std::int64_t n, int threads, Fn&& fn) {
  int nw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nw < 1) nw = 1;
  if (nw == 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  const std::int64_t chunk = (n + nw - 1) / nw;
  for (int w = 0; w < nw; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// n_traj independent trajectories; record i is a pure function of (cfg, p, i).
inline std::vector<ExitRecord> run_ensemble(const SimConfig& cfg, const FieldParams& p,
                                            int threads = 0) {
  cfg.validate();
  p.validate();
  std::vector<ExitRecord> out(static_cast<std::size_t>(cfg.n_traj));
  parallel_for_index(cfg.n_traj, threads, [&](std::int64_t i) {
    out[static_cast<std::size_t>(i)] =
        simulate_to_exit(cfg, p, Rng(cfg.seed, static_cast<std::uint64_t>(i)), i);
  });
  return out;
}

struct StepHalvingAudit {
  double mean_dt = 0.0;
  double mean_half_dt = 0.0;
  double rel_change = 0.0;
  double winding_match_fraction = 0.0;
};

namespace detail {

// One trajectory integrated on dt and on dt/2 along the SAME Brownian path:
// half-step increments refine the coarse ones by a Brownian bridge, so the
// two paths differ only by discretization error.
inline std::pair<ExitRecord, ExitRecord> simulate_coupled_pair(const SimConfig& cfg,
                                                               const FieldParams& p,
                                                               std::int64_t traj_index) {
  Rng rs(cfg.seed, static_cast<std::uint64_t>(traj_index));
  Rng rb(cfg.seed ^ 0x5DEECE66Dull, static_cast<std::uint64_t>(traj_index));
  const PlanePoint focus = p.focus();
  const PlanePoint z0 = draw_init(cfg, rs);

  struct Walker {
    PlanePoint z, v;
    double theta_start;
    std::int64_t cuts = 0;
    bool done = false;
    ExitRecord rec;
  };
  auto make = [&](std::int64_t idx) {
    Walker w;
    w.z = z0;
    w.v = z0 - focus;
    w.theta_start = w.v.angle();
    w.rec.traj_index = idx;
    return w;
  };
  Walker coarse = make(traj_index), fine = make(traj_index);

  const double dt = cfg.dt;
  const double noise_scale = std::sqrt(2.0 * p.eps);
  auto advance = [&](Walker& w, double t_now, double step, PlanePoint dW) {
    if (w.done) return;
    const PlanePoint b = drift_alpha(w.z, p);
    PlanePoint zn{w.z.x + b.x * step + noise_scale * dW.x,
                  w.z.y + b.y * step + noise_scale * dW.y};
    const double r2n = zn.norm2();
    if (r2n >= 1.0) {
      const double r2 = w.z.norm2();
      const double lam = (1.0 - r2) / (r2n - r2);
      const PlanePoint ze{w.z.x + (zn.x - w.z.x) * lam, w.z.y + (zn.y - w.z.y) * lam};
      const PlanePoint ve = ze - focus;
      w.cuts += cut_crossing(w.v, ve);
      w.rec.exit_time = t_now + lam * step;
      w.rec.exit_angle = ze.angle();
      w.rec.winding_count = winding_floor(2.0 * M_PI * w.cuts + ve.angle() - w.theta_start);
      w.rec.status = TrajStatus::Exited;
      w.done = true;
      return;
    }
    const PlanePoint vn = zn - focus;
    w.cuts += cut_crossing(w.v, vn);
    w.z = zn;
    w.v = vn;
  };

  const std::int64_t n_steps = static_cast<std::int64_t>(std::ceil(cfg.t_max / dt));
  const double root_dt = std::sqrt(dt);
  for (std::int64_t k = 0; k < n_steps && !(coarse.done && fine.done); ++k) {
    const PlanePoint xi{rs.next_normal(), rs.next_normal()};
    const PlanePoint dW{root_dt * xi.x, root_dt * xi.y};
    const PlanePoint eta{rb.next_normal(), rb.next_normal()};
    const PlanePoint dW1{0.5 * dW.x + 0.5 * root_dt * eta.x, 0.5 * dW.y + 0.5 * root_dt * eta.y};
    const PlanePoint dW2{dW.x - dW1.x, dW.y - dW1.y};
    advance(coarse, k * dt, dt, dW);
    advance(fine, k * dt, 0.5 * dt, dW1);
    advance(fine, k * dt + 0.5 * dt, 0.5 * dt, dW2);
  }
  auto censor = [&](Walker& w) {
    if (w.done) return;
    w.rec.exit_time = cfg.t_max;
    w.rec.exit_angle = std::nan("");
    w.rec.winding_count = winding_floor(2.0 * M_PI * w.cuts + w.v.angle() - w.theta_start);
    w.rec.status = TrajStatus::Censored;
  };
  censor(coarse);
  censor(fine);
  return {coarse.rec, fine.rec};
}

}  // namespace detail

/// dt vs dt/2 along shared Brownian paths; the source material states no step
/// size, so this is the built-in convergence check.
inline StepHalvingAudit audit_step_halving(SimConfig cfg, const FieldParams& p, int threads = 0) {
  cfg.validate();
  p.validate();
  std::vector<ExitRecord> a(static_cast<std::size_t>(cfg.n_traj));
  std::vector<ExitRecord> b(static_cast<std::size_t>(cfg.n_traj));
  parallel_for_index(cfg.n_traj, threads, [&](std::int64_t i) {
    auto [c, f] = detail::simulate_coupled_pair(cfg, p, i);
    a[static_cast<std::size_t>(i)] = c;
    b[static_cast<std::size_t>(i)] = f;
  });
  auto mean_exit = [](const std::vector<ExitRecord>& rs) {
    double s = 0.0;
    std::int64_t n = 0;
    for (const auto& r : rs)
      if (r.status == TrajStatus::Exited) {
        s += r.exit_time;
        ++n;
      }
    return n ? s / static_cast<double>(n) : 0.0;
  };
  StepHalvingAudit audit;
  audit.mean_dt = mean_exit(a);
  audit.mean_half_dt = mean_exit(b);
  audit.rel_change = std::abs(audit.mean_half_dt - audit.mean_dt) / audit.mean_dt;
  std::int64_t match = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].winding_count == b[i].winding_count) ++match;
  audit.winding_match_fraction = static_cast<double>(match) / static_cast<double>(a.size());
  return audit;
}

}  // namespace escape_lab
