#pragma once

// Embedded Dormand-Prince 5(4) integrator with step-size control and a
// bisection-based event refiner. Callers drive the loop step by step so they
// can watch their own event functions between accepted steps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

namespace escape_lab {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-4;
  double h_max = 0.05;
  double h_min = 1e-14;
};

template <std::size_t N>
using OdeState = std::array<double, N>;

template <std::size_t N, class F>
class Rk45 {
 public:
  using State = OdeState<N>;

  Rk45(F f, OdeOptions opts) : f_(std::move(f)), o_(opts), h_(opts.h_init) {}

  /// One adaptive step from (t, y); on return t and y are advanced.
  /// Returns the step size actually taken.
  double step(double& t, State& y) {
    for (;;) {
      State y5;
      const double err = attempt(t, y, h_, y5);
      if (err <= 1.0 || h_ <= o_.h_min) {
        t += h_;
        y = y5;
        const double taken = h_;
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h_ = std::clamp(h_ * std::clamp(fac, 0.2, 5.0), o_.h_min, o_.h_max);
        return taken;
      }
      h_ = std::max(o_.h_min, h_ * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9));
    }
  }

  /// Single fixed-size trial step (no error control); used for event bisection.
  State step_raw(double t, const State& y, double h) const {
    State y5;
    attempt(t, y, h, y5);
    return y5;
  }

  double current_h() const { return h_; }
  void reset_h(double h) { h_ = std::min(h, o_.h_max); }

 private:
  // Returns scaled error norm of the embedded pair; fills y5 with the 5th-order result.
  double attempt(double t, const State& y, double h, State& y5) const {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                            e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                            e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

    State k1 = f_(t, y);
    State tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    State k2 = f_(t + h / 5, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    State k3 = f_(t + 3 * h / 10, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    State k4 = f_(t + 4 * h / 5, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    State k5 = f_(t + 8 * h / 9, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    State k6 = f_(t + h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    State k7 = f_(t + h, y5);

    double err2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = o_.atol + o_.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err2 += (e / sc) * (e / sc);
    }
    return std::sqrt(err2 / N);
  }

  F f_;
  OdeOptions o_;
  double h_;
};

/// Locate g(y(t)) = 0 inside a step [t0, t0+h] where g changes sign.
/// Evaluates y(t0+s) with single raw RK45 steps from the step's start state.
template <std::size_t N, class F, class G>
double refine_crossing(const Rk45<N, F>& rk, double t0, const OdeState<N>& y0, double h, G g,
                       OdeState<N>& y_out, int iters = 80) {
  double lo = 0.0, hi = h;
  const double g0 = g(y0);
  OdeState<N> y_hi = rk.step_raw(t0, y0, h);
  for (int i = 0; i < iters && (hi - lo) > 1e-15 * std::max(1.0, h); ++i) {
    const double mid = 0.5 * (lo + hi);
    OdeState<N> ym = rk.step_raw(t0, y0, mid);
    if ((g(ym) > 0) == (g0 > 0)) {
      lo = mid;
    } else {
      hi = mid;
      y_hi = ym;
    }
  }
  y_out = y_hi;
  return t0 + hi;
}

}  // namespace escape_lab
