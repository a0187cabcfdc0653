#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "escape_lab/eikonal.hpp"

using namespace escape_lab;

TEST_CASE("characteristic rhs reductions") {
  FieldParams p{0.6, 10.0, 1.0, 0.0};
  CharacteristicState s{{0.2, -0.3}, {0.0, 0.0}, 0.0};
  const auto d = characteristic_rhs(s, p);
  const PlanePoint b = drift_alpha(s.zeta, p);
  CHECK(d.zeta.x == b.x);
  CHECK(d.zeta.y == b.y);
  CHECK(d.psi == 0.0);

  CharacteristicState rest{p.focus(), {0.0, 0.0}, 0.0};
  const auto dr = characteristic_rhs(rest, p);
  CHECK(dr.zeta.x == 0.0);
  CHECK(dr.zeta.y == 0.0);
  CHECK(dr.momentum.x == 0.0);
  CHECK(dr.momentum.y == 0.0);
  CHECK(dr.psi == 0.0);
}

TEST_CASE("centered field: psi_hat is a quarter and phase-independent") {
  FieldParams p{0.0, 10.0, 1.0, 0.0};
  const ShotResult r = shoot(p, 1e-3, M_PI);
  // exact radial value: psi(1) = 1/2 - 1/4 = 0.25
  CHECK_THAT(r.psi_hat, Catch::Matchers::WithinAbs(0.25, 1e-4));
  CHECK(r.hamiltonian_drift < 1e-8);
  CHECK(r.psi_hat >= 1e-6 / 2.0);

  std::vector<double> vals;
  for (double th : {0.0, 1.2, 2.9, 4.4})
    vals.push_back(shoot(p, 1e-3, th).psi_hat);
  const double spread = *std::max_element(vals.begin(), vals.end()) -
                        *std::min_element(vals.begin(), vals.end());
  CHECK(spread < 1e-6);
}

TEST_CASE("psi_hat scan: monotone decay, Hamiltonian gate, arrival times") {
  FieldParams p{0.0, 10.0, 1.0, 0.0};
  std::vector<double> grid;
  for (int i = 0; i <= 9; ++i) grid.push_back(0.1 * i);
  const auto rows = psi_hat_scan(grid, p, 1e-3);
  REQUIRE(rows.size() == grid.size());
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].psi_hat < rows[i - 1].psi_hat);
  for (const auto& r : rows) {
    CHECK(r.hamiltonian_drift < 1e-8);
    CHECK(r.psi_hat >= 1e-6 / 2.0);
    CHECK(std::isfinite(r.t_arrival));
  }
  // large-alpha limit approaches the local quadratic estimate (1-alpha)^2/2
  CHECK_THAT(rows.back().psi_hat, Catch::Matchers::WithinRel(0.005, 0.10));
  // spiral-out from the small circle alone forces double-digit windings here
  CHECK(rows[3].winding >= 5);
  CHECK(rows[3].winding <= 20);
  CHECK(rows.back().winding <= rows[3].winding);

  // arrival times drop when the winding count drops, and plateau otherwise
  double max_plateau = 0.0, min_jump = 1e9;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double dt = std::abs(rows[i].t_arrival - rows[i - 1].t_arrival);
    if (rows[i].winding == rows[i - 1].winding)
      max_plateau = std::max(max_plateau, dt);
    else
      min_jump = std::min(min_jump, dt);
  }
  if (min_jump < 1e9) CHECK(min_jump > max_plateau);
}

TEST_CASE("delta robustness of psi_hat") {
  FieldParams p{0.5, 10.0, 1.0, 0.0};
  const double a = shoot(p, 1e-3, 0.0).psi_hat;
  const double b = shoot(p, 1e-4, 0.0).psi_hat;
  // arrival approximation dominates the delta^2 seeding error; see the
  // project notes for why 1e-5 is not reachable with a terminating solver
  CHECK(std::abs(a - b) < 1e-4);
}

TEST_CASE("psi_hat agrees across launch angles away from caustics") {
  for (double a : {0.2, 0.5, 0.8}) {
    FieldParams p{a, 10.0, 1.0, 0.0};
    std::vector<double> vals;
    for (int k = 0; k < 8; ++k) vals.push_back(shoot(p, 1e-4, 2.0 * M_PI * k / 8.0).psi_hat);
    const double spread = *std::max_element(vals.begin(), vals.end()) -
                          *std::min_element(vals.begin(), vals.end());
    CHECK(spread < 1e-4);
  }
}

TEST_CASE("psi is non-decreasing along a recorded characteristic") {
  FieldParams p{0.5, 10.0, 1.0, 0.0};
  ShootOptions opt;
  opt.record_path = true;
  ShotPath path;
  shoot(p, 1e-3, M_PI, opt, &path);
  REQUIRE(path.psi.size() == path.t.size());
  for (std::size_t i = 1; i < path.psi.size(); ++i) CHECK(path.psi[i] >= path.psi[i - 1] - 1e-14);
}

TEST_CASE("no caustics for this field") {
  for (double a : {0.3, 0.7}) {
    FieldParams p{a, 10.0, 1.0, 0.0};
    CHECK_FALSE(detect_caustic(p, 1e-3, 1.0));
  }
}

TEST_CASE("shoot error paths") {
  FieldParams p{0.5, 10.0, 1.0, 0.0};
  ShootOptions opt;
  opt.horizon = 1e-3;
  CHECK_THROWS_AS(shoot(p, 1e-3, M_PI, opt), NoEscape);
  CHECK_THROWS_AS(shoot(p, 0.6, M_PI), std::invalid_argument);
  CHECK_THROWS_AS(shoot(p, -1.0, M_PI), std::invalid_argument);
}
