#pragma once

// Depression mean-field network: drift, critical points, the unstable limit
// cycle bounding the focus basin (computed in reversed time), and Up-state
// duration ensembles with winding counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "escape_lab/errors.hpp"
#include "escape_lab/field.hpp"
#include "escape_lab/ode.hpp"
#include "escape_lab/rng.hpp"
#include "escape_lab/sde.hpp"

namespace escape_lab {

struct NeuroParams {
  double tau = 0.105;    // voltage relaxation [s]
  double J = 5.2910052910052910;  // connectivity [mV s]
  double U = 0.048765432098765432;  // utilization
  double t_r = 0.9;      // depression recovery [s]
  double T = 2.0;        // threshold [mV]
  double gain = 1.0;     // rate conversion [Hz/mV]
  double sigma = 0.0;    // voltage noise amplitude
  // The displayed depression term is -U R(V); the classical model multiplies
  // by mu. Default follows the displayed equation.
  bool depression_scales_with_mu = false;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("NeuroParams: tau must be > 0");
    if (!(t_r > 0.0)) throw std::invalid_argument("NeuroParams: t_r must be > 0");
    if (!(U > 0.0 && U <= 1.0)) throw std::invalid_argument("NeuroParams: U must be in (0,1]");
    if (!(T > 0.0)) throw std::invalid_argument("NeuroParams: T must be > 0");
    if (!(gain > 0.0)) throw std::invalid_argument("NeuroParams: gain must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("NeuroParams: sigma must be >= 0");
  }
};

// Demo parameter set; NOT taken from any published table. Calibrated so that
// the focus sits at (V, mu) = (20, 0.21), three critical points exist, and the
// basin of the focus is bounded by a subcritical-Hopf unstable limit cycle.
inline NeuroParams demo_neuro_params() {
  NeuroParams p;
  p.T = 2.0;
  p.t_r = 0.9;
  p.U = 0.79 / (18.0 * 0.9);
  p.J = 20.0 / (0.21 * 18.0);
  p.tau = 0.105;
  p.gain = 1.0;
  p.sigma = 0.0015;
  return p;
}

struct NeuroState {
  double V = 0.0;
  double mu = 1.0;
};

inline double rate_R(double V, const NeuroParams& p) {
  return V > p.T ? p.gain * (V - p.T) : 0.0;
}

inline NeuroState neuro_drift(NeuroState s, const NeuroParams& p) {
  const double R = rate_R(s.V, p);
  const double dep = p.depression_scales_with_mu ? p.U * R * s.mu : p.U * R;
  return {(-s.V + p.J * s.mu * R) / p.tau, (1.0 - s.mu) / p.t_r - dep};
}

inline Mat2 neuro_jacobian(NeuroState s, const NeuroParams& p) {
  if (s.V <= p.T) return {-1.0 / p.tau, 0.0, 0.0, -1.0 / p.t_r};
  const double R = rate_R(s.V, p);
  Mat2 J;
  J.a11 = (-1.0 + p.J * s.mu * p.gain) / p.tau;
  J.a12 = p.J * R / p.tau;
  if (p.depression_scales_with_mu) {
    J.a21 = -p.U * p.gain * s.mu;
    J.a22 = -1.0 / p.t_r - p.U * R;
  } else {
    J.a21 = -p.U * p.gain;
    J.a22 = -1.0 / p.t_r;
  }
  return J;
}

enum class CriticalKind { StableNode, StableFocus, Saddle };

struct CriticalPoint {
  NeuroState state;
  CriticalKind kind = CriticalKind::StableNode;
  double eig_real = 0.0;
  double eig_imag = 0.0;  // nonzero only for the focus
};

struct CriticalSet {
  std::vector<CriticalPoint> points;  // P1 first, then by increasing V
  const CriticalPoint& focus() const {
    for (const auto& c : points)
      if (c.kind == CriticalKind::StableFocus) return c;
    throw DegenerateRegime("CriticalSet: no focus present");
  }
};

namespace neuro_detail {

// mu on the mu-nullcline as a function of x = V - T > 0.
inline double mu_null(double x, const NeuroParams& p) {
  return p.depression_scales_with_mu ? 1.0 / (1.0 + p.U * p.t_r * p.gain * x)
                                     : 1.0 - p.U * p.t_r * p.gain * x;
}

// Signed V-nullcline residual along the mu-nullcline.
inline double branch_residual(double x, const NeuroParams& p) {
  return p.J * mu_null(x, p) * p.gain * x - (p.T + x);
}

inline CriticalPoint classify(NeuroState s, const NeuroParams& p) {
  const Mat2 J = neuro_jacobian(s, p);
  CriticalPoint c;
  c.state = s;
  const double tr = J.trace(), det = J.det();
  const double disc = tr * tr - 4.0 * det;
  if (det < 0.0) {
    c.kind = CriticalKind::Saddle;
    c.eig_real = 0.5 * (tr + std::sqrt(disc));
  } else if (disc < 0.0) {
    if (tr >= 0.0) throw DegenerateRegime("critical_points: unstable focus encountered");
    c.kind = CriticalKind::StableFocus;
    c.eig_real = 0.5 * tr;
    c.eig_imag = 0.5 * std::sqrt(-disc);
  } else {
    if (tr >= 0.0) throw DegenerateRegime("critical_points: unstable node encountered");
    c.kind = CriticalKind::StableNode;
    c.eig_real = 0.5 * (tr + std::sqrt(disc));
  }
  return c;
}

}  // namespace neuro_detail

/// All drift roots: the explicit down-state (0,1) plus sign-change bracketing
/// on the V > T branch. Throws DegenerateRegime below minimal connectivity.
inline CriticalSet critical_points(const NeuroParams& p) {
  p.validate();
  CriticalSet set;
  set.points.push_back(neuro_detail::classify({0.0, 1.0}, p));

  const double x_hi = 10.0 * std::max({p.T, p.J, 10.0});
  const int n_scan = 20000;
  double prev_x = 1e-12;
  double prev_f = neuro_detail::branch_residual(prev_x, p);
  for (int i = 1; i <= n_scan; ++i) {
    const double x = x_hi * static_cast<double>(i) / n_scan;
    const double f = neuro_detail::branch_residual(x, p);
    if ((prev_f < 0.0) != (f < 0.0)) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((neuro_detail::branch_residual(mid, p) < 0.0) ==
            (neuro_detail::branch_residual(lo, p) < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      const double x_root = 0.5 * (lo + hi);
      set.points.push_back(
          neuro_detail::classify({p.T + x_root, neuro_detail::mu_null(x_root, p)}, p));
    }
    prev_x = x;
    prev_f = f;
  }
  if (set.points.size() < 3)
    throw DegenerateRegime("critical_points: fewer than three critical points (connectivity below minimal)");
  return set;
}

struct LimitCycle {
  std::vector<NeuroState> polyline;  // closed: first == last within closure_gap
  NeuroState focus;
  double period = 0.0;
  double closure_gap = 0.0;
  double scale_V = 1.0;  // half-extents used by the membership metric
  double scale_mu = 1.0;
  std::vector<double> radius_grid;  // scaled cycle radius per angle cell

  double scaled_angle(NeuroState s) const {
    return std::atan2((s.mu - focus.mu) / scale_mu, (s.V - focus.V) / scale_V);
  }
  double scaled_radius(NeuroState s) const {
    return std::hypot((s.V - focus.V) / scale_V, (s.mu - focus.mu) / scale_mu);
  }
  double boundary_radius(double angle) const {
    const std::size_t n = radius_grid.size();
    const double u = (angle + M_PI) / (2.0 * M_PI) * static_cast<double>(n);
    std::size_t i = static_cast<std::size_t>(u) % n;
    const double frac = u - std::floor(u);
    return radius_grid[i] * (1.0 - frac) + radius_grid[(i + 1) % n] * frac;
  }
  /// Membership by winding of the polyline; radius_grid is the fast path.
  bool contains(NeuroState s) const { return scaled_radius(s) < boundary_radius(scaled_angle(s)); }
};

struct LimitCycleOptions {
  double offset = 1e-3;        // initial displacement from the focus, scaled units
  double section_tol = 1e-9;   // return-map convergence on the section
  int max_crossings = 40000;
  double rtol = 1e-12;
  double atol = 1e-14;
  int radius_bins = 4096;
};

/// The unstable cycle is attracting in reversed time: integrate backwards from
/// near the focus, converge the return map on the section mu = mu_focus
/// (V > V_focus), then store one period as a polyline.
inline LimitCycle limit_cycle(const NeuroParams& p, const LimitCycleOptions& opt = {}) {
  const CriticalSet cs = critical_points(p);
  const CriticalPoint& focus = cs.focus();
  const double Vf = focus.state.V, mf = focus.state.mu;

  auto rhs = [&p](double, const OdeState<2>& y) {
    const NeuroState d = neuro_drift({y[0], y[1]}, p);
    return OdeState<2>{-d.V, -d.mu};  // reversed time
  };
  OdeOptions oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  oo.h_max = 0.05 / std::max(1.0, std::abs(focus.eig_imag));
  oo.h_init = oo.h_max / 10.0;
  Rk45<2, decltype(rhs)> rk(rhs, oo);

  // seed slightly off the focus; amplitudes in V are O(V), in mu O(0.01 V/J)
  OdeState<2> y{Vf * (1.0 + opt.offset), mf};
  double t = 0.0;
  const double horizon = 1e7;
  double prev_section_V = y[0];
  int crossings = 0;
  std::optional<double> converged_V;

  auto section_gap = [&](const OdeState<2>& s) { return s[1] - mf; };

  while (t < horizon) {
    const OdeState<2> y0 = y;
    const double t0 = t;
    rk.step(t, y);
    if (!(std::abs(y[0]) < 1e6) || !(std::abs(y[1]) < 1e3))
      throw NoCycleFound("limit_cycle: reversed orbit diverged (no enclosing cycle)");
    if (y0[1] < mf && y[1] >= mf && y[0] > Vf) {
      OdeState<2> yc;
      refine_crossing(rk, t0, y0, t - t0, section_gap, yc);
      ++crossings;
      if (crossings > opt.max_crossings)
        throw NoCycleFound("limit_cycle: return map did not converge");
      if (std::abs(yc[0] - prev_section_V) < opt.section_tol * std::max(1.0, std::abs(yc[0]))) {
        converged_V = yc[0];
        y = yc;
        break;
      }
      prev_section_V = yc[0];
    }
  }
  if (!converged_V) throw NoCycleFound("limit_cycle: horizon exceeded before closure");

  // one full reversed period from the converged section point
  LimitCycle cyc;
  cyc.focus = focus.state;
  cyc.polyline.push_back({y[0], y[1]});
  const double t_start = t;
  bool closed = false;
  while (t - t_start < horizon) {
    const OdeState<2> y0 = y;
    const double t0 = t;
    rk.step(t, y);
    if (y0[1] < mf && y[1] >= mf && y[0] > Vf) {
      OdeState<2> yc;
      const double tc = refine_crossing(rk, t0, y0, t - t0, section_gap, yc);
      cyc.polyline.push_back({yc[0], yc[1]});
      cyc.period = tc - t_start;
      closed = true;
      break;
    }
    cyc.polyline.push_back({y[0], y[1]});
  }
  if (!closed) throw NoCycleFound("limit_cycle: failed to close the recorded period");
  cyc.closure_gap = std::hypot(cyc.polyline.back().V - cyc.polyline.front().V,
                               cyc.polyline.back().mu - cyc.polyline.front().mu);

  double max_dV = 0.0, max_dmu = 0.0;
  for (const auto& s : cyc.polyline) {
    max_dV = std::max(max_dV, std::abs(s.V - Vf));
    max_dmu = std::max(max_dmu, std::abs(s.mu - mf));
  }
  cyc.scale_V = max_dV;
  cyc.scale_mu = max_dmu;

  // scaled radius per angle cell (the cycle winds once around the focus, so
  // the angle marches monotonically and every cell gets hit)
  const int nb = opt.radius_bins;
  cyc.radius_grid.assign(nb, 0.0);
  std::vector<bool> seen(nb, false);
  auto bin_of = [&](double ang) {
    int b = static_cast<int>((ang + M_PI) / (2.0 * M_PI) * nb);
    return std::clamp(b, 0, nb - 1);
  };
  for (std::size_t i = 0; i + 1 < cyc.polyline.size(); ++i) {
    const double a0 = cyc.scaled_angle(cyc.polyline[i]);
    const double r0 = cyc.scaled_radius(cyc.polyline[i]);
    const int b = bin_of(a0);
    if (!seen[b] || r0 < cyc.radius_grid[b]) {
      cyc.radius_grid[b] = r0;
      seen[b] = true;
    }
  }
  // fill unseen cells by nearest-neighbor march
  int last = -1;
  for (int i = 0; i < 2 * nb; ++i) {
    const int b = i % nb;
    if (seen[b])
      last = b;
    else if (last >= 0 && !seen[b])
      cyc.radius_grid[b] = cyc.radius_grid[last];
  }
  return cyc;
}

struct NeuroSimConfig {
  double dt = 2e-4;
  double t_max = 200.0;
  std::int64_t n_traj = 1;
  std::uint64_t seed = 0xC0FFEE;
};

/// Euler-Maruyama on the network equations (noise on V only, amplitude
/// sigma*sqrt(dt/tau)); exit when the trajectory crosses the limit cycle,
/// winding counted around the focus. Same seeding contract as the canonical
/// ensembles.
inline std::vector<ExitRecord> simulate_upstate_ensemble(const NeuroParams& p, NeuroState init,
                                                         const NeuroSimConfig& cfg,
                                                         const LimitCycle& cycle,
                                                         int threads = 0) {
  p.validate();
  if (!cycle.contains(init))
    throw InitOutsideDomain("simulate_upstate_ensemble: init outside the limit cycle");

  const double dt = cfg.dt;
  const double noise_amp = p.sigma * std::sqrt(dt / p.tau);
  const std::int64_t n_steps = static_cast<std::int64_t>(std::ceil(cfg.t_max / dt));
  std::vector<ExitRecord> out(static_cast<std::size_t>(cfg.n_traj));

  parallel_for_index(cfg.n_traj, threads, [&](std::int64_t i) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
    NeuroState s = init;
    double ang = cycle.scaled_angle(s);
    const double ang_start = ang;
    PlanePoint v{(s.V - cycle.focus.V) / cycle.scale_V, (s.mu - cycle.focus.mu) / cycle.scale_mu};
    std::int64_t cuts = 0;
    double g_prev = cycle.scaled_radius(s) - cycle.boundary_radius(ang);

    ExitRecord rec;
    rec.traj_index = i;
    rec.status = TrajStatus::Censored;
    for (std::int64_t k = 0; k < n_steps; ++k) {
      const double R = rate_R(s.V, p);
      const double dep = p.depression_scales_with_mu ? p.U * R * s.mu : p.U * R;
      NeuroState sn{s.V + dt * (-s.V + p.J * s.mu * R) / p.tau + noise_amp * rng.next_normal(),
                    s.mu + dt * ((1.0 - s.mu) / p.t_r - dep)};
      const PlanePoint vn{(sn.V - cycle.focus.V) / cycle.scale_V,
                          (sn.mu - cycle.focus.mu) / cycle.scale_mu};
      const double ang_n = std::atan2(vn.y, vn.x);
      const double g = cycle.scaled_radius(sn) - cycle.boundary_radius(ang_n);
      if (g >= 0.0) {
        const double lam = g_prev < 0.0 ? g_prev / (g_prev - g) : 0.0;
        rec.exit_time = k * dt + lam * dt;
        const PlanePoint ve{v.x + lam * (vn.x - v.x), v.y + lam * (vn.y - v.y)};
        cuts += detail::cut_crossing(v, ve);
        rec.exit_angle = std::atan2(ve.y, ve.x);
        rec.winding_count =
            detail::winding_floor(2.0 * M_PI * cuts + std::atan2(ve.y, ve.x) - ang_start);
        rec.status = TrajStatus::Exited;
        out[static_cast<std::size_t>(i)] = rec;
        return;
      }
      cuts += detail::cut_crossing(v, vn);
      s = sn;
      v = vn;
      g_prev = g;
    }
    rec.exit_time = cfg.t_max;
    rec.exit_angle = std::nan("");
    rec.winding_count = detail::winding_floor(2.0 * M_PI * cuts + std::atan2(v.y, v.x) - ang_start);
    out[static_cast<std::size_t>(i)] = rec;
  });
  return out;
}

/// Slow exact membership check used to validate the radius-grid fast path.
inline bool point_in_polyline(const std::vector<NeuroState>& poly, double sV, double smu,
                              NeuroState q) {
  int crossings = 0;
  const double qx = q.V / sV, qy = q.mu / smu;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const double x1 = poly[i].V / sV, y1 = poly[i].mu / smu;
    const double x2 = poly[i + 1].V / sV, y2 = poly[i + 1].mu / smu;
    if ((y1 > qy) != (y2 > qy)) {
      const double xc = x1 + (x2 - x1) * (qy - y1) / (y2 - y1);
      if (xc > qx) ++crossings;
    }
  }
  return crossings % 2 == 1;
}

}  // namespace escape_lab
