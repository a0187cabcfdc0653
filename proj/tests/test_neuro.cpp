#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "escape_lab/neuro.hpp"

using namespace escape_lab;

TEST_CASE("threshold-linear rate") {
  NeuroParams p = demo_neuro_params();
  CHECK(rate_R(p.T, p) == 0.0);
  CHECK(rate_R(p.T - 1.0, p) == 0.0);
  CHECK_THAT(rate_R(p.T + 1.0, p), Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK(std::abs(rate_R(p.T + 1e-12, p)) < 1e-11);  // continuous across T
}

TEST_CASE("drift fixed point at the down state and the sub-threshold branch") {
  NeuroParams p = demo_neuro_params();
  const NeuroState d = neuro_drift({0.0, 1.0}, p);
  CHECK(d.V == 0.0);
  CHECK(d.mu == 0.0);

  const NeuroState s{1.0, 0.4};  // V < T
  const NeuroState dd = neuro_drift(s, p);
  CHECK_THAT(dd.V, Catch::Matchers::WithinRel(-s.V / p.tau, 1e-15));
  CHECK_THAT(dd.mu, Catch::Matchers::WithinRel((1.0 - s.mu) / p.t_r, 1e-15));

  // continuity of the drift across V = T
  const NeuroState lo = neuro_drift({p.T - 1e-9, 0.5}, p);
  const NeuroState hi = neuro_drift({p.T + 1e-9, 0.5}, p);
  CHECK(std::abs(lo.V - hi.V) < 1e-6);
  CHECK(std::abs(lo.mu - hi.mu) < 1e-6);

  // depression pushes mu inward at mu = 1 when the rate is positive
  CHECK(neuro_drift({p.T + 5.0, 1.0}, p).mu < 0.0);
}

TEST_CASE("critical points of the demo set: node, saddle, focus") {
  const NeuroParams p = demo_neuro_params();
  const CriticalSet cs = critical_points(p);
  REQUIRE(cs.points.size() == 3);
  CHECK(cs.points[0].kind == CriticalKind::StableNode);
  CHECK(cs.points[0].state.V == 0.0);
  CHECK(cs.points[0].state.mu == 1.0);

  int saddles = 0, foci = 0;
  for (const auto& c : cs.points) {
    saddles += c.kind == CriticalKind::Saddle;
    foci += c.kind == CriticalKind::StableFocus;
    const NeuroState d = neuro_drift(c.state, p);
    CHECK(std::hypot(d.V, d.mu) < 1e-10);
  }
  CHECK(saddles == 1);
  CHECK(foci == 1);

  const auto& focus = cs.focus();
  CHECK(focus.eig_imag != 0.0);
  CHECK(focus.eig_real < 0.0);
  // demo calibration pins the focus at the canonical start point
  CHECK_THAT(focus.state.V, Catch::Matchers::WithinAbs(20.0, 1e-9));
  CHECK_THAT(focus.state.mu, Catch::Matchers::WithinAbs(0.21, 1e-9));
}

TEST_CASE("below minimal connectivity only the down state remains") {
  NeuroParams p = demo_neuro_params();
  p.J = 1.0;
  CHECK_THROWS_AS(critical_points(p), DegenerateRegime);
}

TEST_CASE("jacobian classification matches finite differences") {
  const NeuroParams p = demo_neuro_params();
  const CriticalSet cs = critical_points(p);
  for (const auto& c : cs.points) {
    if (c.state.V <= p.T) continue;  // piecewise corner at V = T
    const Mat2 J = neuro_jacobian(c.state, p);
    const double h = 1e-7;
    auto fd = [&](double dV, double dmu) {
      return neuro_drift({c.state.V + dV, c.state.mu + dmu}, p);
    };
    const NeuroState vx1 = fd(h, 0), vx0 = fd(-h, 0), vy1 = fd(0, h), vy0 = fd(0, -h);
    CHECK_THAT((vx1.V - vx0.V) / (2 * h), Catch::Matchers::WithinRel(J.a11, 1e-6));
    CHECK_THAT((vy1.V - vy0.V) / (2 * h), Catch::Matchers::WithinRel(J.a12, 1e-6));
    CHECK_THAT((vx1.mu - vx0.mu) / (2 * h), Catch::Matchers::WithinRel(J.a21, 1e-6));
    CHECK_THAT((vy1.mu - vy0.mu) / (2 * h), Catch::Matchers::WithinRel(J.a22, 1e-6));
  }
}

TEST_CASE("limit cycle closes and encloses the focus") {
  const NeuroParams p = demo_neuro_params();
  const LimitCycle cyc = limit_cycle(p);
  CHECK(cyc.closure_gap < 1e-8);
  CHECK(cyc.period > 0.0);
  CHECK(cyc.contains(cyc.focus));
  CHECK(cyc.contains({cyc.focus.V * (1.0 + 1e-4), cyc.focus.mu}));

  // fast membership agrees with the even-odd polyline test away from the edge
  Rng rng(6, 0);
  int checked = 0;
  for (int i = 0; i < 500 && checked < 200; ++i) {
    NeuroState q{cyc.focus.V + (2.0 * rng.next_double() - 1.0) * 2.0 * cyc.scale_V,
                 cyc.focus.mu + (2.0 * rng.next_double() - 1.0) * 2.0 * cyc.scale_mu};
    const double margin = std::abs(cyc.scaled_radius(q) - cyc.boundary_radius(cyc.scaled_angle(q)));
    if (margin < 1e-3) continue;
    CHECK(cyc.contains(q) == point_in_polyline(cyc.polyline, cyc.scale_V, cyc.scale_mu, q));
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("noise-free trajectories respect the basin") {
  const NeuroParams p = demo_neuro_params();
  const LimitCycle cyc = limit_cycle(p);

  auto rhs = [&p](double, const OdeState<2>& y) {
    const NeuroState d = neuro_drift({y[0], y[1]}, p);
    return OdeState<2>{d.V, d.mu};
  };
  OdeOptions oo;
  oo.rtol = 1e-10;
  oo.atol = 1e-12;
  oo.h_max = 0.01;
  const double horizon = 10.0 * cyc.period;

  // start just inside the cycle: stays inside for ten periods
  {
    const double ang = cyc.scaled_angle({cyc.focus.V + cyc.scale_V, cyc.focus.mu});
    const double r = 0.98 * cyc.boundary_radius(ang);
    OdeState<2> y{cyc.focus.V + r * cyc.scale_V * std::cos(ang),
                  cyc.focus.mu + r * cyc.scale_mu * std::sin(ang)};
    Rk45<2, decltype(rhs)> rk(rhs, oo);
    double t = 0.0;
    bool stayed = true;
    while (t < horizon) {
      rk.step(t, y);
      if (!cyc.contains({y[0], y[1]})) {
        stayed = false;
        break;
      }
    }
    CHECK(stayed);
    // and converges toward the focus
    CHECK(std::hypot((y[0] - cyc.focus.V) / cyc.scale_V, (y[1] - cyc.focus.mu) / cyc.scale_mu) <
          1.0);
  }

  // start just outside: leaves a fixed neighborhood of the cycle
  {
    const double ang = cyc.scaled_angle({cyc.focus.V + cyc.scale_V, cyc.focus.mu});
    const double r = 1.02 * cyc.boundary_radius(ang);
    OdeState<2> y{cyc.focus.V + r * cyc.scale_V * std::cos(ang),
                  cyc.focus.mu + r * cyc.scale_mu * std::sin(ang)};
    Rk45<2, decltype(rhs)> rk(rhs, oo);
    double t = 0.0;
    double max_excess = 0.0;
    while (t < horizon) {
      rk.step(t, y);
      const NeuroState s{y[0], y[1]};
      max_excess = std::max(max_excess,
                            cyc.scaled_radius(s) - cyc.boundary_radius(cyc.scaled_angle(s)));
      if (max_excess > 0.5) break;
    }
    CHECK(max_excess > 0.5);
  }
}

TEST_CASE("noise-free trajectories from the init converge to the focus") {
  NeuroParams p = demo_neuro_params();
  p.sigma = 0.0;
  const CriticalSet cs = critical_points(p);
  const auto& focus = cs.focus();
  auto rhs = [&p](double, const OdeState<2>& y) {
    const NeuroState d = neuro_drift({y[0], y[1]}, p);
    return OdeState<2>{d.V, d.mu};
  };
  OdeOptions oo;
  oo.h_max = 0.01;
  Rk45<2, decltype(rhs)> rk(rhs, oo);
  OdeState<2> y{focus.state.V + 0.01, focus.state.mu};
  double t = 0.0;
  const double horizon = 20.0 / std::abs(focus.eig_real);
  double dist = 1e9;
  while (t < horizon) {
    rk.step(t, y);
    dist = std::hypot(y[0] - focus.state.V, (y[1] - focus.state.mu) * 100.0);
    if (dist < 1e-4) break;
  }
  CHECK(dist < 1e-4);
}

TEST_CASE("up-state ensemble: zero noise censors everything") {
  NeuroParams p = demo_neuro_params();
  p.sigma = 0.0;
  const LimitCycle cyc = limit_cycle(p);
  NeuroSimConfig cfg;
  cfg.n_traj = 8;
  cfg.t_max = 5.0;
  cfg.dt = 1e-3;
  const auto recs = simulate_upstate_ensemble(p, {20.0, 0.21}, cfg, cyc, 1);
  for (const auto& r : recs) CHECK(r.status == TrajStatus::Censored);
}

TEST_CASE("up-state ensemble rejects an init outside the cycle") {
  NeuroParams p = demo_neuro_params();
  const LimitCycle cyc = limit_cycle(p);
  NeuroSimConfig cfg;
  cfg.n_traj = 1;
  CHECK_THROWS_AS(
      simulate_upstate_ensemble(p, {cyc.focus.V + 10.0 * cyc.scale_V, cyc.focus.mu}, cfg, cyc, 1),
      InitOutsideDomain);
}

TEST_CASE("parameter validation") {
  NeuroParams p = demo_neuro_params();
  p.tau = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = demo_neuro_params();
  p.U = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
