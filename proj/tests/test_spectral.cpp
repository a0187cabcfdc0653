#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "escape_lab/fft.hpp"
#include "escape_lab/spectral.hpp"

using namespace escape_lab;

namespace {

// Independent closed form: sigma has harmonics 0, +-1, +-2 only, so the
// periodic Z solves mode-by-mode: z_k = 2 sig_k / (4 - i omega k).
double z_fourier(double s, double alpha, double omega) {
  const double a2 = alpha * alpha;
  const double om = (1.0 - a2) * (1.0 - a2);
  const double c0 = ((1.0 + a2) * (1.0 + a2) + 2.0 * a2) / om;
  const double c1 = -2.0 * alpha * (1.0 + a2) / om;
  const double c2 = a2 / om;
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> h1 = 2.0 * c1 / (4.0 - i * omega) * std::exp(i * s);
  const std::complex<double> h2 = 2.0 * c2 / (4.0 - 2.0 * i * omega) * std::exp(2.0 * i * s);
  return c0 / 2.0 + 2.0 * h1.real() + 2.0 * h2.real();
}

}  // namespace

TEST_CASE("bernoulli solution: constant at alpha=0, periodic, consistent") {
  FieldParams p{0.0, 10.0, 1.0, 0.0};
  const auto sol = bernoulli_xi(p);
  for (double x : sol.xi) CHECK_THAT(x, Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));

  FieldParams p2{0.9, 20.0, 1.0, 0.0};
  const auto sol2 = bernoulli_xi(p2);
  CHECK(std::abs(sol2.z.front() - sol2.z.back()) < 1e-10);
  for (std::size_t i = 0; i < sol2.z.size(); ++i)
    CHECK(std::abs(sol2.z[i] * sol2.xi[i] * sol2.xi[i] - 1.0) < 1e-12);
}

TEST_CASE("bernoulli solution matches the harmonic closed form") {
  for (auto [a, om] : {std::pair{0.5, 10.0}, std::pair{0.9, 20.0}, std::pair{0.3, 5.0}}) {
    FieldParams p{a, om, 1.0, 0.0};
    const auto sol = bernoulli_xi(p);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.z.size(); ++i)
      worst = std::max(worst, std::abs(sol.z[i] - z_fourier(sol.theta_grid[i], a, om)));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("bernoulli residual under the nonlinear equation") {
  // -sigma xi^3 + 2 xi + omega xi' = 0, xi' by spectral differentiation
  FieldParams p{0.5, 10.0, 1.0, 0.0};
  const int n = 4096;
  const auto sol = bernoulli_xi(p, n);
  std::vector<std::complex<double>> buf(n);
  for (int i = 0; i < n; ++i) buf[i] = sol.xi[i];
  fft_inplace(buf);
  for (int k = 0; k < n; ++k) {
    const int kk = k <= n / 2 ? k : k - n;
    buf[k] *= std::complex<double>(0.0, kk);
  }
  // inverse fft via conjugation
  for (auto& v : buf) v = std::conj(v);
  fft_inplace(buf);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double xip = std::conj(buf[i]).real() / n;
    const double s = sol.theta_grid[i];
    const double res = -sigma_alpha(s, p.alpha) * std::pow(sol.xi[i], 3) + 2.0 * sol.xi[i] +
                       p.omega * xip;
    worst = std::max(worst, std::abs(res));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("bernoulli rejects invalid grids and lambda != 1") {
  FieldParams p{0.5, 10.0, 1.0, 0.0};
  CHECK_THROWS_AS(bernoulli_xi(p, 100), std::invalid_argument);
  FieldParams bad = p;
  bad.lambda = 0.5;
  CHECK_THROWS_AS(bernoulli_xi(bad), std::invalid_argument);
}

TEST_CASE("omega1 equals 4 independently of alpha and omega") {
  for (double a : {0.0, 0.3, 0.6, 0.9})
    for (double om : {5.0, 10.0, 20.0}) {
      FieldParams p{a, om, 1.0, 0.0};
      CHECK_THAT(omega1(p), Catch::Matchers::WithinAbs(4.0, 1e-6));
    }
}

TEST_CASE("second eigenvalue pairs decay 4 with frequency omega") {
  FieldParams p{0.9, 20.0, 1.0, 0.0025};
  const auto l2 = second_eigenvalue(p);
  CHECK_THAT(l2.decay, Catch::Matchers::WithinAbs(4.0, 1e-6));
  CHECK(l2.frequency == 20.0);
  FieldParams p10{0.9, 10.0, 1.0, 0.0025};
  CHECK(second_eigenvalue(p10).frequency == 10.0);
}

TEST_CASE("C(omega) hand values and large-omega behavior") {
  CHECK_THAT(c_of_omega(10.0), Catch::Matchers::WithinAbs(3.1565, 1e-3));
  CHECK_THAT(c_of_omega(20.0), Catch::Matchers::WithinAbs(7.1649, 1e-3));
  CHECK_THAT(c_of_omega(1e4) / (3.0 * 1e4 / 8.0), Catch::Matchers::WithinAbs(1.0, 1e-3));
  CHECK_THROWS_AS(c_of_omega(0.0), std::invalid_argument);
}

TEST_CASE("asymptotic MFPT variants") {
  FieldParams p{0.999, 10.0, 1.0, 0.0025};
  CHECK_THAT(mfpt_asymptotic(p, MfptVariant::TauAlpha) / mfpt_asymptotic(p, MfptVariant::AF),
             Catch::Matchers::WithinAbs(1.0, 1e-3));

  FieldParams q{0.9, 10.0, 1.0, 0.0025};
  CHECK_THAT(mfpt_asymptotic(q, MfptVariant::AF), Catch::Matchers::WithinRel(0.4872, 1e-3));

  // log tau - log(sqrt(eps) prefactor) is affine in 1/eps with slope (1-a)^2/2
  auto reduced = [&](double eps) {
    FieldParams r = q;
    r.eps = eps;
    return std::log(mfpt_asymptotic(r, MfptVariant::AF)) - 0.5 * std::log(eps);
  };
  const double e1 = 1e-3, e2 = 5e-4;
  const double slope = (reduced(e1) - reduced(e2)) / (1.0 / e1 - 1.0 / e2);
  CHECK_THAT(slope, Catch::Matchers::WithinRel(0.5 * 0.1 * 0.1, 1e-12));

  // shooting override feeds the exponent
  const double t1 = mfpt_asymptotic(q, MfptVariant::TauAlpha, 0.0047);
  const double t2 = mfpt_asymptotic(q, MfptVariant::TauAlpha);
  CHECK_THAT(std::log(t2 / t1), Catch::Matchers::WithinRel((0.005 - 0.0047) / q.eps, 1e-9));

  CHECK_THROWS_AS(mfpt_asymptotic({0.0, 10.0, 1.0, 0.001}, MfptVariant::AF),
                  std::invalid_argument);
}

TEST_CASE("eta regimes") {
  FieldParams p{0.9, 10.0, 1.0, 0.0025};
  auto r = regime(p);
  CHECK_THAT(r.eta, Catch::Matchers::WithinRel(0.0025 / (0.19 * 0.19), 1e-12));
  CHECK(r.label == Regime::Oscillatory);

  p.alpha = 0.95;
  r = regime(p);
  CHECK_THAT(r.eta, Catch::Matchers::WithinAbs(0.263, 5e-3));
  CHECK(r.label == Regime::LargeNoise);

  p.alpha = 0.9999;
  CHECK(regime(p).label == Regime::LargeNoise);

  p.alpha = 0.3;
  CHECK(regime(p).label == Regime::Classical);
}

TEST_CASE("spectral report bundles the derived quantities") {
  FieldParams p{0.9, 20.0, 1.0, 0.0025};
  const auto rep = make_spectral_report(p);
  CHECK_THAT(rep.omega1, Catch::Matchers::WithinAbs(4.0, 1e-6));
  CHECK(rep.omega2 == 20.0);
  CHECK(rep.lambda0_estimate == 1.0 / rep.mfpt_taualpha);
  CHECK(rep.regime_label == Regime::Oscillatory);
}
