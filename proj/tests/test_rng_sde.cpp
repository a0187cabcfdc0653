#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "escape_lab/sde.hpp"

using namespace escape_lab;

TEST_CASE("streams are reproducible and index-separated") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool any_diff = false;
  Rng a2(42, 7);
  for (int i = 0; i < 100; ++i) any_diff = any_diff || (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
}

TEST_CASE("normal sampler moments") {
  Rng rng(123, 0);
  double s = 0, s2 = 0, s3 = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    s += x;
    s2 += x * x;
    s3 += x * x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK_THAT(s2 / n, Catch::Matchers::WithinAbs(1.0, 0.01));
  CHECK(std::abs(s3 / n) < 0.03);
}

TEST_CASE("em_step fixed point and degenerate noise") {
  FieldParams p{0.9, 10.0, 1.0, 0.0};
  const PlanePoint f = p.focus();
  const PlanePoint out = em_step(f, 1e-4, {0.3, -0.8}, p);  // eps = 0: noise ignored
  CHECK(out.x == f.x);
  CHECK(out.y == f.y);

  FieldParams pn{0.9, 10.0, 1.0, 0.0025};
  const PlanePoint z{0.2, -0.4};
  const PlanePoint drift_only = em_step(z, 1e-4, {0.0, 0.0}, pn);
  const PlanePoint b = drift_alpha(z, pn);
  CHECK_THAT(drift_only.x, Catch::Matchers::WithinAbs(z.x + 1e-4 * b.x, 1e-18));
  CHECK_THAT(drift_only.y, Catch::Matchers::WithinAbs(z.y + 1e-4 * b.y, 1e-18));
}

TEST_CASE("em_step increment variance matches 2 eps dt") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  const double dt = 1e-4;
  const PlanePoint z{-0.5, 0.1};
  const PlanePoint b = drift_alpha(z, p);
  Rng rng(2024, 0);
  const int n = 1000000;
  double sx = 0, sx2 = 0, sy = 0, sy2 = 0;
  for (int i = 0; i < n; ++i) {
    const PlanePoint noise{rng.next_normal(), rng.next_normal()};
    const PlanePoint zn = em_step(z, dt, noise, p);
    const double ix = zn.x - z.x - b.x * dt;
    const double iy = zn.y - z.y - b.y * dt;
    sx += ix;
    sx2 += ix * ix;
    sy += iy;
    sy2 += iy * iy;
  }
  const double vx = sx2 / n - (sx / n) * (sx / n);
  const double vy = sy2 / n - (sy / n) * (sy / n);
  CHECK_THAT(vx, Catch::Matchers::WithinRel(2.0 * p.eps * dt, 0.01));
  CHECK_THAT(vy, Catch::Matchers::WithinRel(2.0 * p.eps * dt, 0.01));
}

TEST_CASE("noise-free flow never exits the basin") {
  FieldParams p{0.9, 10.0, 1.0, 0.0};
  SimConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_max = 50.0;
  cfg.init = PlanePoint{-0.8, 0.0};
  const ExitRecord r = simulate_to_exit(cfg, p, Rng(1, 0));
  CHECK(r.status == TrajStatus::Censored);
  CHECK(r.exit_time == 50.0);
}

TEST_CASE("init outside the disk is rejected") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  SimConfig cfg;
  cfg.init = PlanePoint{1.5, 0.0};
  CHECK_THROWS_AS(simulate_to_exit(cfg, p, Rng(1, 0)), InitOutsideDomain);
  cfg.init = PlanePoint{1.0, 0.0};
  CHECK_THROWS_AS(simulate_to_exit(cfg, p, Rng(1, 0)), InitOutsideDomain);
}

TEST_CASE("interpolated exit points sit on the circle") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  SimConfig cfg;
  cfg.init = PlanePoint{-0.8, 0.0};
  cfg.n_traj = 64;
  cfg.seed = 99;
  const auto records = run_ensemble(cfg, p, 1);
  for (const auto& r : records) {
    REQUIRE(r.status == TrajStatus::Exited);
    CHECK(r.exit_time <= cfg.t_max);
    CHECK(std::isfinite(r.exit_angle));
  }
  // re-derive one exit point location from the record: the angle must map to
  // radius 1 within interpolation error; checked inside the integrator by
  // construction, so here we just re-simulate one trajectory and measure.
  Rng rng(cfg.seed, 5);
  PlanePoint z = std::get<PlanePoint>(cfg.init);
  const double dt = cfg.dt;
  const double amp = std::sqrt(2.0 * p.eps * dt);
  for (;;) {
    const PlanePoint b = drift_alpha(z, p);
    PlanePoint zn{z.x + b.x * dt + amp * rng.next_normal(),
                  z.y + b.y * dt + amp * rng.next_normal()};
    if (zn.norm2() >= 1.0) {
      const double r2 = z.norm2();
      const double lam = (1.0 - r2) / (zn.norm2() - r2);
      const PlanePoint ze{z.x + (zn.x - z.x) * lam, z.y + (zn.y - z.y) * lam};
      CHECK(std::abs(ze.norm() - 1.0) < 1e-6);
      break;
    }
    z = zn;
  }
}

TEST_CASE("ensembles are bit-identical across worker counts") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  SimConfig cfg;
  cfg.init = PlanePoint{-0.8, 0.0};
  cfg.n_traj = 200;
  cfg.seed = 4242;
  const auto one = run_ensemble(cfg, p, 1);
  const auto eight = run_ensemble(cfg, p, 8);
  REQUIRE(one.size() == eight.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].exit_time == eight[i].exit_time);
    CHECK((one[i].exit_angle == eight[i].exit_angle ||
           (std::isnan(one[i].exit_angle) && std::isnan(eight[i].exit_angle))));
    CHECK(one[i].winding_count == eight[i].winding_count);
    CHECK(one[i].status == eight[i].status);
    CHECK(one[i].traj_index == static_cast<std::int64_t>(i));
  }
}

TEST_CASE("winding by cut crossings equals the unwrapped angle sum") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  SimConfig cfg;
  cfg.init = PlanePoint{-0.8, 0.0};
  cfg.seed = 31;
  for (std::int64_t idx = 0; idx < 40; ++idx) {
    const ExitRecord rec = simulate_to_exit(cfg, p, Rng(cfg.seed, idx), idx);
    // replay the identical path, accumulating atan2 increments directly
    Rng rng(cfg.seed, idx);
    PlanePoint z = std::get<PlanePoint>(cfg.init);
    PlanePoint v = z - p.focus();
    const double dt = cfg.dt;
    const double amp = std::sqrt(2.0 * p.eps * dt);
    double total = 0.0;
    for (;;) {
      const PlanePoint b = drift_alpha(z, p);
      PlanePoint zn{z.x + b.x * dt + amp * rng.next_normal(),
                    z.y + b.y * dt + amp * rng.next_normal()};
      PlanePoint target = zn;
      const bool exits = zn.norm2() >= 1.0;
      if (exits) {
        const double r2 = z.norm2();
        const double lam = (1.0 - r2) / (zn.norm2() - r2);
        target = {z.x + (zn.x - z.x) * lam, z.y + (zn.y - z.y) * lam};
      }
      const PlanePoint vn = target - p.focus();
      total += std::atan2(cross(v, vn), dot(v, vn));
      if (exits) break;
      z = zn;
      v = vn;
    }
    const auto direct = static_cast<std::int64_t>(std::floor(total / (2.0 * M_PI)));
    CHECK(rec.winding_count == std::max<std::int64_t>(direct, 0));
  }
}

TEST_CASE("uniform-disk initial draw stays inside and varies") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  SimConfig cfg;
  cfg.init = UniformDiskInit{};
  cfg.n_traj = 50;
  cfg.t_max = 0.5;  // short horizon; just exercising the init path
  cfg.seed = 7;
  const auto records = run_ensemble(cfg, p, 1);
  CHECK(records.size() == 50);
}

TEST_CASE("config validation") {
  SimConfig cfg;
  cfg.n_traj = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dt = 2.0;
  cfg.t_max = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
