#pragma once

// Two-term exit-time density fit y(t) = k1 e^{-k2 t} + k3 e^{-k4 t} cos(k5 (t-k6))
// by damped least squares (gradient/Gauss-Newton blend, gain-ratio damping),
// multi-started over the phase.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "escape_lab/errors.hpp"
#include "escape_lab/spectral.hpp"
#include "escape_lab/stats.hpp"

namespace escape_lab {

struct FitResult {
  double k1 = 0, k2 = 0, k3 = 0, k4 = 0, k5 = 0, k6 = 0;
  double residual_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;

  std::array<double, 6> as_array() const { return {k1, k2, k3, k4, k5, k6}; }
};

namespace fit_detail {

inline double model(const std::array<double, 6>& k, double t) {
  return k[0] * std::exp(-k[1] * t) + k[2] * std::exp(-k[3] * t) * std::cos(k[4] * (t - k[5]));
}

inline std::array<double, 6> model_grad(const std::array<double, 6>& k, double t) {
  const double e1 = std::exp(-k[1] * t);
  const double e2 = std::exp(-k[3] * t);
  const double ph = k[4] * (t - k[5]);
  const double cs = std::cos(ph), sn = std::sin(ph);
  return {e1,
          -k[0] * t * e1,
          e2 * cs,
          -k[2] * t * e2 * cs,
          -k[2] * e2 * sn * (t - k[5]),
          k[2] * e2 * sn * k[4]};
}

// Cholesky solve of the 6x6 SPD damped normal equations.
inline bool solve_spd(std::array<std::array<double, 6>, 6> A, std::array<double, 6>& b) {
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < i; ++j) A[i][i] -= A[i][j] * A[i][j];
    if (A[i][i] <= 0.0) return false;
    A[i][i] = std::sqrt(A[i][i]);
    for (int r = i + 1; r < 6; ++r) {
      for (int j = 0; j < i; ++j) A[r][i] -= A[r][j] * A[i][j];
      A[r][i] /= A[i][i];
    }
  }
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < i; ++j) b[i] -= A[i][j] * b[j];
    b[i] /= A[i][i];
  }
  for (int i = 5; i >= 0; --i) {
    for (int j = i + 1; j < 6; ++j) b[i] -= A[j][i] * b[j];
    b[i] /= A[i][i];
  }
  return true;
}

struct LmProblem {
  const std::vector<double>& t;
  const std::vector<double>& y;
  const std::vector<double>& w;  // 1/sigma per point

  double objective(const std::array<double, 6>& k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = (model(k, t[i]) - y[i]) * w[i];
      s += r * r;
    }
    return 0.5 * s;
  }
};

inline FitResult lm_fit(const LmProblem& prob, std::array<double, 6> k, int max_iter = 500,
                        double grad_tol = 1e-10) {
  FitResult out;
  double F = prob.objective(k);
  double mu = -1.0;
  double nu = 2.0;
  for (int it = 0; it < max_iter; ++it) {
    std::array<std::array<double, 6>, 6> H{};
    std::array<double, 6> g{};
    for (std::size_t i = 0; i < prob.t.size(); ++i) {
      const double r = (model(k, prob.t[i]) - prob.y[i]) * prob.w[i];
      std::array<double, 6> J = model_grad(k, prob.t[i]);
      for (auto& v : J) v *= prob.w[i];
      for (int a = 0; a < 6; ++a) {
        g[a] += J[a] * r;
        for (int b = a; b < 6; ++b) H[a][b] += J[a] * J[b];
      }
    }
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < a; ++b) H[a][b] = H[b][a];

    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax < grad_tol) {
      out.converged = true;
      out.iterations = it;
      break;
    }
    if (mu < 0.0) {
      double dmax = 0.0;
      for (int a = 0; a < 6; ++a) dmax = std::max(dmax, H[a][a]);
      mu = 1e-3 * dmax;
    }

    auto Hd = H;
    for (int a = 0; a < 6; ++a) Hd[a][a] += mu * std::max(H[a][a], 1e-12);
    std::array<double, 6> step = g;
    bool ok = solve_spd(Hd, step);
    std::array<double, 6> kn = k;
    if (ok)
      for (int a = 0; a < 6; ++a) kn[a] = k[a] - step[a];
    const bool feasible = ok && kn[1] > 0.0 && kn[3] > 0.0 && kn[4] > 0.0;
    const double Fn = feasible ? prob.objective(kn) : std::numeric_limits<double>::infinity();

    double pred = 0.0;  // predicted reduction for the gain ratio
    if (ok)
      for (int a = 0; a < 6; ++a) pred += step[a] * (mu * std::max(H[a][a], 1e-12) * step[a] + g[a]);
    const double rho = pred > 0.0 ? (F - Fn) / (0.5 * pred) : -1.0;

    if (feasible && Fn < F && rho > 0.0) {
      k = kn;
      F = Fn;
      const double f = 1.0 - std::pow(2.0 * rho - 1.0, 3);
      mu *= std::max(1.0 / 3.0, f);
      nu = 2.0;
    } else {
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e40) {
        out.iterations = it;
        break;
      }
    }
    out.iterations = it + 1;
  }
  out.k1 = k[0];
  out.k2 = k[1];
  out.k3 = k[2];
  out.k4 = k[3];
  out.k5 = k[4];
  out.k6 = k[5];
  out.residual_norm = std::sqrt(2.0 * F);
  return out;
}

// Linear least squares for the two amplitudes with shapes fixed.
inline void init_amplitudes(const LmProblem& prob, std::array<double, 6>& k) {
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < prob.t.size(); ++i) {
    const double w2 = prob.w[i] * prob.w[i];
    const double f1 = std::exp(-k[1] * prob.t[i]);
    const double f2 = std::exp(-k[3] * prob.t[i]) * std::cos(k[4] * (prob.t[i] - k[5]));
    a11 += w2 * f1 * f1;
    a12 += w2 * f1 * f2;
    a22 += w2 * f2 * f2;
    b1 += w2 * f1 * prob.y[i];
    b2 += w2 * f2 * prob.y[i];
  }
  const double det = a11 * a22 - a12 * a12;
  if (std::abs(det) > 1e-300) {
    k[0] = (a22 * b1 - a12 * b2) / det;
    k[2] = (a11 * b2 - a12 * b1) / det;
  }
  if (!(k[0] > 0.0)) k[0] = *std::max_element(prob.y.begin(), prob.y.end());
}

}  // namespace fit_detail

/// Least-squares fit of the two-term density to bin-center values with
/// Poisson-style weights 1/sqrt(max(count,1)); multi-start over 8 phases,
/// deterministic winner by (residual, start index).
inline FitResult fit_two_term(const Histogram& h) {
  if (h.size() < 20) throw InsufficientData("fit_two_term: need at least 20 bins");
  if (h.total < 1000) throw InsufficientData("fit_two_term: need at least 1e3 counts");

  std::vector<double> t(h.size()), y = h.densities(), w(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    t[i] = h.center(i);
    w[i] = 1.0 / std::sqrt(static_cast<double>(std::max<std::int64_t>(h.counts[i], 1)));
  }
  // weights are defined on counts; rescale to density units so sigma tracks
  // sqrt(count)/(population*width)
  const double scale = static_cast<double>(h.population) * h.bin_width(0);
  for (double& v : w) v *= scale;

  fit_detail::LmProblem prob{t, y, w};

  const double k2_init = 1.0 / std::max(h.mean(), 1e-12);
  double k5_init = 2.0 * M_PI / (0.2 * (h.edges.back() - h.edges.front()));
  if (auto pp = peak_period(h)) k5_init = 2.0 * M_PI / pp->period;

  FitResult best;
  for (int s = 0; s < 8; ++s) {
    std::array<double, 6> k{0.0, k2_init, 0.0, 4.0, k5_init,
                            s * (2.0 * M_PI / k5_init) / 8.0};
    fit_detail::init_amplitudes(prob, k);
    FitResult r = fit_detail::lm_fit(prob, k);
    if (r.residual_norm < best.residual_norm) best = r;
  }
  // canonical form: positive oscillation amplitude, phase in [0, 2pi/k5)
  if (best.k3 < 0.0) {
    best.k3 = -best.k3;
    best.k6 += M_PI / best.k5;
  }
  const double period = 2.0 * M_PI / best.k5;
  best.k6 -= period * std::floor(best.k6 / period);
  if (!(best.k1 >= 0.0) || !std::isfinite(best.residual_norm)) best.converged = false;
  return best;
}

struct TheoryRow {
  std::string quantity;
  double theory = 0.0;
  double fitted = 0.0;
  double rel_error = 0.0;
};

/// Table-style comparison of the fit against the closed-form eigenvalues.
inline std::vector<TheoryRow> theory_report(const FitResult& f, const FieldParams& p) {
  const double lam0 = 1.0 / mfpt_asymptotic(p, MfptVariant::TauAlpha);
  const double w1 = omega1(p);
  auto rel = [](double th, double fit) { return std::abs(fit - th) / std::abs(th); };
  return {{"lambda0", lam0, f.k2, rel(lam0, f.k2)},
          {"frequency", p.omega, f.k5, rel(p.omega, f.k5)},
          {"decay", w1, f.k4, rel(w1, f.k4)}};
}

}  // namespace escape_lab
