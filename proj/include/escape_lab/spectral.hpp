#pragma once

// Closed-form and semi-analytic spectral quantities: the periodic Bernoulli
// solution on the mapped cycle, the complex second eigenvalue (omega1, omega2),
// C(omega), asymptotic MFPT formulas, and the eta-regime diagnostic.

#include <cmath>
#include <string>
#include <vector>

#include "escape_lab/errors.hpp"
#include "escape_lab/field.hpp"

namespace escape_lab {

struct PeriodicSolution {
  std::vector<double> theta_grid;  // N+1 points, 0 .. 2pi inclusive
  std::vector<double> xi;          // positive
  std::vector<double> z;           // xi^{-2}
  double c_alpha = 0.0;
};

/// sigma_alpha(s) = |1 - alpha e^{is}|^4 / (1 - alpha^2)^2 (eps-free form).
inline double sigma_alpha(double s, double alpha) {
  const double f = 1.0 - 2.0 * alpha * std::cos(s) + alpha * alpha;
  const double om = 1.0 - alpha * alpha;
  return (f * f) / (om * om);
}

/// Periodic solution of the mapped Bernoulli equation via the linearizing
/// substitution Z = xi^{-2}:
///   Z(s) = C e^{4s/omega} - (2/omega) int_0^s sigma(u) e^{4(s-u)/omega} du,
/// with C fixed by Z(0) = Z(2pi). Cumulative integral by composite Simpson
/// with midpoints.
inline PeriodicSolution bernoulli_xi(const FieldParams& p, int grid_size = 4096) {
  p.validate();
  require_unit_lambda(p, "bernoulli_xi");
  if (grid_size < 64 || (grid_size & (grid_size - 1)) != 0)
    throw std::invalid_argument("bernoulli_xi: grid_size must be a power of two >= 64");

  const int n = grid_size;
  const double h = 2.0 * M_PI / n;
  const double om = p.omega;
  auto g = [&](double s) { return sigma_alpha(s, p.alpha) * std::exp(-4.0 * s / om); };

  std::vector<double> I(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const double s = i * h;
    I[i + 1] = I[i] + h / 6.0 * (g(s) + 4.0 * g(s + 0.5 * h) + g(s + h));
  }
  const double E = std::exp(8.0 * M_PI / om);
  const double C = (2.0 / om) * E / (E - 1.0) * I[n];

  PeriodicSolution sol;
  sol.c_alpha = C;
  sol.theta_grid.resize(n + 1);
  sol.z.resize(n + 1);
  sol.xi.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = i * h;
    sol.theta_grid[i] = s;
    sol.z[i] = std::exp(4.0 * s / om) * (C - (2.0 / om) * I[i]);
    if (!(sol.z[i] > 0.0))
      throw NonPositiveZ("bernoulli_xi: non-positive Z at s=" + std::to_string(s));
    sol.xi[i] = 1.0 / std::sqrt(sol.z[i]);
  }
  return sol;
}

/// omega1 = (omega2/pi) int_0^{2pi} sigma xi^2 / B ds with B = omega after the
/// conformal map; analytically 4, independent of alpha and omega.
inline double omega1(const FieldParams& p, int grid_size = 4096) {
  const PeriodicSolution sol = bernoulli_xi(p, grid_size);
  const int n = grid_size;
  const double h = 2.0 * M_PI / n;
  // Simpson over the endpoint grid (n even)
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * sigma_alpha(sol.theta_grid[i], p.alpha) / sol.z[i];
  }
  s *= h / 3.0;
  return s / M_PI;
}

struct ComplexPair {
  double decay = 0.0;      // omega1, the real part
  double frequency = 0.0;  // omega2, the imaginary part
};

inline ComplexPair second_eigenvalue(const FieldParams& p) {
  require_unit_lambda(p, "second_eigenvalue");
  return {omega1(p), p.omega};
}

/// C(omega) = 3w/8 - (8/w)/(1+(4/w)^2) + (4/w)/(4+(4/w)^2).
inline double c_of_omega(double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("c_of_omega: omega must be > 0");
  const double q = 4.0 / omega;
  return 3.0 * omega / 8.0 - (8.0 / omega) / (1.0 + q * q) + q / (4.0 + q * q);
}

enum class MfptVariant { TauAlpha, AF };

/// Asymptotic MFPT from the focus to the cycle. psi_hat defaults to
/// (1-alpha)^2/2; pass a shooting value to compare against the local estimate.
inline double mfpt_asymptotic(const FieldParams& p, MfptVariant variant,
                              double psi_hat_override = -1.0) {
  p.validate();
  require_unit_lambda(p, "mfpt_asymptotic");
  if (!(p.eps > 0.0)) throw std::invalid_argument("mfpt_asymptotic: eps must be > 0");
  if (!(p.alpha > 0.0)) throw std::invalid_argument("mfpt_asymptotic: alpha must be in (0,1)");
  const double a = p.alpha;
  const double C = c_of_omega(p.omega);
  const double root = std::sqrt(2.0 * M_PI * p.eps);
  if (variant == MfptVariant::AF)
    return C * root / 6.0 * std::exp((1.0 - a) * (1.0 - a) / (2.0 * p.eps));
  const double psi_hat = psi_hat_override > 0.0 ? psi_hat_override : 0.5 * (1.0 - a) * (1.0 - a);
  const double a2 = a * a;
  return C * root * (1.0 + a) * (1.0 + a) / (4.0 * (1.0 + 4.0 * a2 + a2 * a2)) *
         std::exp(psi_hat / p.eps);
}

enum class Regime { Classical, Oscillatory, LargeNoise };

struct RegimeThresholds {
  double classical_below = 0.02;
  double large_noise_from = 0.2;
};

struct RegimeResult {
  double eta = 0.0;
  Regime label = Regime::Classical;
};

/// eta = eps / (1 - alpha^2)^2; thresholds are configuration, not claims.
inline RegimeResult regime(const FieldParams& p, const RegimeThresholds& th = {}) {
  if (!(p.alpha < 1.0)) throw std::invalid_argument("regime: alpha must be < 1");
  const double om = 1.0 - p.alpha * p.alpha;
  RegimeResult r;
  r.eta = p.eps / (om * om);
  r.label = r.eta < th.classical_below
                ? Regime::Classical
                : (r.eta < th.large_noise_from ? Regime::Oscillatory : Regime::LargeNoise);
  return r;
}

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Classical: return "Classical";
    case Regime::Oscillatory: return "Oscillatory";
    default: return "LargeNoise";
  }
}

// Reference decay-rate constants quoted for the canonical comparison table;
// recorded for reporting only (their parameter set is not reproducible from
// the asymptotic formulas).
inline constexpr double kLambda0ReferenceTauAlpha = 1.57;
inline constexpr double kLambda0ReferenceAF = 1.66;

struct SpectralReport {
  double omega1 = 0.0;
  double omega2 = 0.0;
  ComplexPair lambda2;
  double lambda0_estimate = 0.0;  // reciprocal of mfpt_asymptotic(TauAlpha)
  double mfpt_taualpha = 0.0;
  double mfpt_af = 0.0;
  double eta = 0.0;
  Regime regime_label = Regime::Classical;
};

inline SpectralReport make_spectral_report(const FieldParams& p) {
  SpectralReport r;
  r.omega1 = omega1(p);
  r.omega2 = p.omega;
  r.lambda2 = {r.omega1, r.omega2};
  r.mfpt_taualpha = mfpt_asymptotic(p, MfptVariant::TauAlpha);
  r.mfpt_af = mfpt_asymptotic(p, MfptVariant::AF);
  r.lambda0_estimate = 1.0 / r.mfpt_taualpha;
  const RegimeResult reg = regime(p);
  r.eta = reg.eta;
  r.regime_label = reg.label;
  return r;
}

}  // namespace escape_lab
