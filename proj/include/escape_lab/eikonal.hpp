#pragma once

// Shooting solver for the eikonal equation by characteristics: 5-dimensional
// trajectories launched from a small circle around the focus, with arrival
// detection at the unit circle and the boundary-layer tail correction.
//
// The exact characteristics reach the boundary only asymptotically (the
// momentum vanishes there), and finite-precision trajectories that narrowly
// miss get ejected along the anti-manifold mode. Arrival is therefore either
// a threshold crossing at r = 1 - arrival_tol or the last apex of the damped
// radial oscillation before the sequence stops descending; psi is completed
// with psi_hat = psi + rho |p_n| / 2, which is exact within the linearized
// boundary layer (d(rho p_n)/dt = 2 p_n^2).

#include <cmath>
#include <optional>
#include <vector>

#include "escape_lab/errors.hpp"
#include "escape_lab/field.hpp"
#include "escape_lab/ode.hpp"

namespace escape_lab {

struct CharacteristicState {
  PlanePoint zeta;
  PlanePoint momentum;
  double psi = 0.0;
};

/// zeta' = 2p + b(zeta); p' = -(grad b)^T p; psi' = |p|^2.
inline CharacteristicState characteristic_rhs(const CharacteristicState& s, const FieldParams& p) {
  const PlanePoint b = drift_alpha(s.zeta, p);
  const Mat2 J = drift_alpha_jacobian(s.zeta, p);
  const PlanePoint mp = J.apply_transposed(s.momentum);
  CharacteristicState d;
  d.zeta = {2.0 * s.momentum.x + b.x, 2.0 * s.momentum.y + b.y};
  d.momentum = {-mp.x, -mp.y};
  d.psi = s.momentum.norm2();
  return d;
}

inline double eikonal_hamiltonian(PlanePoint zeta, PlanePoint momentum, const FieldParams& p) {
  const PlanePoint b = drift_alpha(zeta, p);
  return momentum.norm2() + dot(b, momentum);
}

enum class ArrivalKind { Threshold, ApexSequenceTurn, Dive, HorizonApex };

struct ShotResult {
  double t_arrival = 0.0;
  double psi_hat = 0.0;
  std::int64_t winding_count = 0;
  double hit_angle = 0.0;
  double hamiltonian_drift = 0.0;  // max |F(t) - F(0)| along the shot
  double stop_distance = 0.0;      // 1 - r at the stop point
  ArrivalKind arrival = ArrivalKind::Threshold;
};

struct ShootOptions {
  double arrival_tol = 1e-3;
  double apex_window = 0.02;   // apex tracking starts once r > 1 - apex_window
  double dive_radius = 0.90;   // falling below this after an apex ends the shot
  double rtol = 1e-10;
  double atol = 1e-12;
  double horizon = -1.0;       // <= 0: 10 * (winding_estimate + 1) * 2pi / omega
  int winding_estimate = 8;
  bool record_path = false;
};

namespace eikonal_detail {

struct Apex {
  OdeState<5> y{};
  double t = 0.0;
  double rho = 0.0;
  double winding_angle = 0.0;
};

inline double radius(const OdeState<5>& y) { return std::hypot(y[0], y[1]); }

inline double r2dot(const OdeState<5>& y, const FieldParams& p) {
  const PlanePoint b = drift_alpha({y[0], y[1]}, p);
  return y[0] * (2.0 * y[2] + b.x) + y[1] * (2.0 * y[3] + b.y);
}

inline double angle_increment(PlanePoint v0, PlanePoint v1) {
  return std::atan2(cross(v0, v1), dot(v0, v1));
}

}  // namespace eikonal_detail

struct ShotPath {
  std::vector<double> t;
  std::vector<PlanePoint> zeta;
  std::vector<double> psi;
};

inline ShotResult shoot(const FieldParams& p, double delta, double theta0,
                        const ShootOptions& opt = {}, ShotPath* path = nullptr) {
  p.validate();
  if (!(delta > 0.0 && delta < 1.0 - p.alpha))
    throw std::invalid_argument("shoot: need 0 < delta < 1 - alpha");
  using eikonal_detail::Apex;

  const PlanePoint focus = p.focus();
  const double horizon = opt.horizon > 0.0
                             ? opt.horizon
                             : 10.0 * (opt.winding_estimate + 1) * 2.0 * M_PI / p.omega;

  auto rhs = [&p](double, const OdeState<5>& y) {
    CharacteristicState s{{y[0], y[1]}, {y[2], y[3]}, y[4]};
    const CharacteristicState d = characteristic_rhs(s, p);
    return OdeState<5>{d.zeta.x, d.zeta.y, d.momentum.x, d.momentum.y, d.psi};
  };

  OdeOptions oo;
  oo.rtol = opt.rtol;
  oo.atol = opt.atol;
  oo.h_max = 0.2 / p.omega;
  oo.h_init = 1e-4;
  Rk45<5, decltype(rhs)> rk(rhs, oo);

  const double c = std::cos(theta0), sn = std::sin(theta0);
  OdeState<5> y{focus.x + delta * c, focus.y + delta * sn, p.lambda * delta * c,
                p.lambda * delta * sn, p.lambda * delta * delta / 2.0};
  double t = 0.0;
  const double F0 = eikonal_hamiltonian({y[0], y[1]}, {y[2], y[3]}, p);
  double f_drift = 0.0;
  double winding_angle = 0.0;
  const double r_arrive = 1.0 - opt.arrival_tol;
  const double r_window = 1.0 - opt.apex_window;
  std::optional<Apex> best;
  if (path) {
    path->t.push_back(t);
    path->zeta.push_back({y[0], y[1]});
    path->psi.push_back(y[4]);
  }

  auto finish = [&](const OdeState<5>& ys, double ts, double wind_angle, ArrivalKind kind) {
    ShotResult res;
    const double r = eikonal_detail::radius(ys);
    const double rho = 1.0 - r;
    const double pn = (ys[2] * ys[0] + ys[3] * ys[1]) / r;
    res.t_arrival = ts;
    res.psi_hat = ys[4] + 0.5 * rho * std::abs(pn);
    res.hit_angle = std::atan2(ys[1], ys[0]);
    res.winding_count = static_cast<std::int64_t>(std::floor(wind_angle / (2.0 * M_PI)));
    if (res.winding_count < 0) res.winding_count = 0;
    res.hamiltonian_drift = f_drift;
    res.stop_distance = rho;
    res.arrival = kind;
    return res;
  };

  while (t < horizon) {
    const OdeState<5> y0 = y;
    const double t0 = t;
    const double rdot0 = eikonal_detail::r2dot(y0, p);
    rk.step(t, y);
    const double h_taken = t - t0;

    const PlanePoint v0{y0[0] - focus.x, y0[1] - focus.y};
    const PlanePoint v1{y[0] - focus.x, y[1] - focus.y};
    const double dang = eikonal_detail::angle_increment(v0, v1);

    const double F = eikonal_hamiltonian({y[0], y[1]}, {y[2], y[3]}, p);
    f_drift = std::max(f_drift, std::abs(F - F0));
    if (path) {
      path->t.push_back(t);
      path->zeta.push_back({y[0], y[1]});
      path->psi.push_back(y[4]);
    }

    if (eikonal_detail::radius(y) >= r_arrive) {
      OdeState<5> ye;
      const double te = refine_crossing(
          rk, t0, y0, h_taken,
          [&](const OdeState<5>& s) { return s[0] * s[0] + s[1] * s[1] - r_arrive * r_arrive; },
          ye);
      const PlanePoint vv{ye[0] - focus.x, ye[1] - focus.y};
      return finish(ye, te, winding_angle + eikonal_detail::angle_increment(v0, vv),
                    ArrivalKind::Threshold);
    }

    const double rdot1 = eikonal_detail::r2dot(y, p);
    const bool in_window = eikonal_detail::radius(y0) >= r_window;
    if (in_window && rdot0 > 0.0 && rdot1 <= 0.0) {
      OdeState<5> ya;
      const double ta = refine_crossing(
          rk, t0, y0, h_taken, [&](const OdeState<5>& s) { return eikonal_detail::r2dot(s, p); },
          ya);
      const double rho_a = 1.0 - eikonal_detail::radius(ya);
      const PlanePoint va{ya[0] - focus.x, ya[1] - focus.y};
      const double wind_at_apex = winding_angle + eikonal_detail::angle_increment(v0, va);
      if (best && rho_a >= best->rho)
        return finish(best->y, best->t, best->winding_angle, ArrivalKind::ApexSequenceTurn);
      best = Apex{ya, ta, rho_a, wind_at_apex};
    }

    winding_angle += dang;
    if (best && eikonal_detail::radius(y) < opt.dive_radius)
      return finish(best->y, best->t, best->winding_angle, ArrivalKind::Dive);
  }
  if (best) return finish(best->y, best->t, best->winding_angle, ArrivalKind::HorizonApex);
  throw NoEscape("shoot: characteristic did not reach the boundary within the horizon");
}

struct ScanRow {
  double alpha = 0.0;
  double theta0 = 0.0;
  double t_arrival = 0.0;
  double psi_hat = 0.0;
  std::int64_t winding = 0;
  double hit_angle = 0.0;
  double hamiltonian_drift = 0.0;
};

/// One shot per alpha from the real axis (theta0 = pi, zeta(0) = -alpha-delta).
inline std::vector<ScanRow> psi_hat_scan(const std::vector<double>& alpha_grid,
                                         FieldParams p_template, double delta,
                                         const ShootOptions& opt = {}) {
  std::vector<ScanRow> rows;
  rows.reserve(alpha_grid.size());
  for (double a : alpha_grid) {
    FieldParams p = p_template;
    p.alpha = a;
    const ShotResult r = shoot(p, delta, M_PI, opt);
    rows.push_back({a, M_PI, r.t_arrival, r.psi_hat, r.winding_count, r.hit_angle,
                    r.hamiltonian_drift});
  }
  return rows;
}

/// Characteristic-crossing flag: launch two shots separated by dtheta and
/// watch the orientation of the connecting vector against the flow direction.
inline bool detect_caustic(const FieldParams& p, double delta, double theta0,
                           double dtheta = 1e-3, const ShootOptions& opt = {}) {
  ShootOptions o = opt;
  o.record_path = true;
  ShotPath pa, pb;
  shoot(p, delta, theta0 - 0.5 * dtheta, o, &pa);
  shoot(p, delta, theta0 + 0.5 * dtheta, o, &pb);
  if (pa.t.size() < 3 || pb.t.size() < 3) return false;
  const double t_end = std::min(pa.t.back(), pb.t.back());
  std::size_t jb = 0;
  int sign0 = 0;
  for (std::size_t i = 1; i + 1 < pa.t.size() && pa.t[i] < t_end; ++i) {
    while (jb + 1 < pb.t.size() && pb.t[jb + 1] < pa.t[i]) ++jb;
    const double lam = (pa.t[i] - pb.t[jb]) / std::max(pb.t[jb + 1] - pb.t[jb], 1e-300);
    const PlanePoint zb{pb.zeta[jb].x + lam * (pb.zeta[jb + 1].x - pb.zeta[jb].x),
                        pb.zeta[jb].y + lam * (pb.zeta[jb + 1].y - pb.zeta[jb].y)};
    const PlanePoint dz = zb - pa.zeta[i];
    const PlanePoint flow{pa.zeta[i + 1].x - pa.zeta[i].x, pa.zeta[i + 1].y - pa.zeta[i].y};
    const double w = cross(flow, dz);
    if (std::abs(w) < 1e-18) continue;
    const int s = w > 0 ? 1 : -1;
    if (sign0 == 0)
      sign0 = s;
    else if (s != sign0)
      return true;
  }
  return false;
}

}  // namespace escape_lab
