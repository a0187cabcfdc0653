#pragma once

// Transformed Hopf vector field: the Mobius image of the normal-form field,
// its boundary-local polar components, and the Jacobian at the focus.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace escape_lab {

struct PlanePoint {
  double x = 0.0;
  double y = 0.0;

  double norm2() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
  double angle() const { return std::atan2(y, x); }
};

inline PlanePoint operator+(PlanePoint a, PlanePoint b) { return {a.x + b.x, a.y + b.y}; }
inline PlanePoint operator-(PlanePoint a, PlanePoint b) { return {a.x - b.x, a.y - b.y}; }
inline PlanePoint operator*(double s, PlanePoint a) { return {s * a.x, s * a.y}; }
inline double dot(PlanePoint a, PlanePoint b) { return a.x * b.x + a.y * b.y; }
inline double cross(PlanePoint a, PlanePoint b) { return a.x * b.y - a.y * b.x; }

/// Parameters of the transformed field: focus offset `alpha`, rotation
/// frequency `omega`, decay rate `lambda` (closed forms require 1), and
/// noise intensity `eps`.
struct FieldParams {
  double alpha = 0.0;
  double omega = 10.0;
  double lambda = 1.0;
  double eps = 0.0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("FieldParams: alpha must be in [0,1)");
    if (!(omega > 0.0)) throw std::invalid_argument("FieldParams: omega must be > 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("FieldParams: lambda must be > 0");
    if (!(eps >= 0.0)) throw std::invalid_argument("FieldParams: eps must be >= 0");
  }

  PlanePoint focus() const { return {-alpha, 0.0}; }
};

inline void require_unit_lambda(const FieldParams& p, const char* what) {
  if (p.lambda != 1.0)
    throw std::invalid_argument(std::string(what) + ": closed form is derived for lambda=1; got lambda=" +
                                std::to_string(p.lambda));
}

struct PolarComponents {
  double b_normal_coeff = 0.0;  // coefficient of -rho in the normal direction
  double b_tangent = 0.0;       // tangential speed on the cycle
};

struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  PlanePoint apply(PlanePoint v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
  PlanePoint apply_transposed(PlanePoint v) const { return {a11 * v.x + a21 * v.y, a12 * v.x + a22 * v.y}; }
  double det() const { return a11 * a22 - a12 * a21; }
  double trace() const { return a11 + a22; }
};

/// Hopf normal form: lambda * z * (-1 + |z|^2 + i omega).
inline PlanePoint hopf_drift(PlanePoint z, const FieldParams& p) {
  const double g = z.norm2() - 1.0;
  // (x+iy)(g + i omega)
  return {p.lambda * (z.x * g - z.y * p.omega), p.lambda * (z.x * p.omega + z.y * g)};
}

namespace detail {
inline constexpr double kDiskTol = 1e-9;
}

/// Disk automorphism (z - alpha) / (1 - alpha z); sends 0 to -alpha.
inline PlanePoint mobius_map(PlanePoint z, double alpha) {
  if (z.norm2() > 1.0 + detail::kDiskTol)
    throw std::domain_error("mobius_map: point outside the closed unit disk");
  const std::complex<double> zc(z.x, z.y);
  const std::complex<double> w = (zc - alpha) / (1.0 - alpha * zc);
  return {w.real(), w.imag()};
}

inline PlanePoint mobius_inverse(PlanePoint zeta, double alpha) {
  if (zeta.norm2() > 1.0 + detail::kDiskTol)
    throw std::domain_error("mobius_inverse: point outside the closed unit disk");
  const std::complex<double> zc(zeta.x, zeta.y);
  const std::complex<double> w = (zc + alpha) / (1.0 + alpha * zc);
  return {w.real(), w.imag()};
}

/// Transformed field b_alpha evaluated from its explicit rational expression
/// (no chained inverse map):
///   b = lambda * (zeta+alpha)(1+alpha zeta)/(1-alpha^2) * (-1 + |w|^2 + i omega),
/// with -1+|w|^2 written as (|zeta|^2-1)(1-alpha^2)/|1+alpha zeta|^2 to avoid
/// cancellation near the boundary.
inline PlanePoint drift_alpha(PlanePoint zeta, const FieldParams& p) {
  const double a = p.alpha;
  // N = (zeta + a)(1 + a zeta)
  const double nx = (zeta.x + a) * (1.0 + a * zeta.x) - a * zeta.y * zeta.y;
  const double ny = zeta.y * (1.0 + a * zeta.x) + (zeta.x + a) * a * zeta.y;
  const double den = (1.0 + a * zeta.x) * (1.0 + a * zeta.x) + a * a * zeta.y * zeta.y;
  const double one_m_a2 = 1.0 - a * a;
  const double g = (zeta.norm2() - 1.0) * one_m_a2 / den;
  const double s = p.lambda / one_m_a2;
  return {s * (nx * g - ny * p.omega), s * (nx * p.omega + ny * g)};
}

/// Jacobian of drift_alpha by Wirtinger differentiation of the rational form.
inline Mat2 drift_alpha_jacobian(PlanePoint zeta, const FieldParams& p) {
  using C = std::complex<double>;
  const double a = p.alpha;
  const double one_m_a2 = 1.0 - a * a;
  const C z(zeta.x, zeta.y);
  const C zb = std::conj(z);
  const C N = (z + a) * (1.0 + a * z);
  const C Np = 1.0 + 2.0 * a * z + a * a;
  const C D = (1.0 + a * z) * (1.0 + a * zb);
  const C G = one_m_a2 * (z * zb - 1.0) / D;
  const C dGdz = one_m_a2 * (zb - (z * zb - 1.0) * a / (1.0 + a * z)) / D;
  const C dGdzb = one_m_a2 * (z - (z * zb - 1.0) * a / (1.0 + a * zb)) / D;
  const C iw(0.0, p.omega);
  const C A = p.lambda * (Np * (G + iw) + N * dGdz) / one_m_a2;  // db/dz
  const C B = p.lambda * (N * dGdzb) / one_m_a2;                 // db/dzbar
  return {(A + B).real(), -(A - B).imag(), (A + B).imag(), (A - B).real()};
}

/// Boundary-local components at angle theta on the unit circle:
/// radial drift = -rho * b_normal_coeff + o(rho) with rho = 1 - r.
inline PolarComponents polar_components(double theta, const FieldParams& p) {
  const double a = p.alpha;
  const double one_m_a2 = 1.0 - a * a;
  PolarComponents pc;
  pc.b_normal_coeff = p.lambda * 2.0 * (one_m_a2 - p.omega * a * std::sin(theta)) / one_m_a2;
  pc.b_tangent = p.lambda * p.omega * (1.0 + 2.0 * a * std::cos(theta) + a * a) / one_m_a2;
  return pc;
}

/// Jacobian at the focus (-alpha, 0): lambda * [[-1,-omega],[omega,-1]],
/// independent of alpha.
inline Mat2 focus_jacobian(const FieldParams& p) {
  return {-p.lambda, -p.lambda * p.omega, p.lambda * p.omega, -p.lambda};
}

/// exp(t * focus_jacobian) for lambda = 1: e^{-t} times rotation by omega t.
inline Mat2 linear_flow(double t, const FieldParams& p) {
  require_unit_lambda(p, "linear_flow");
  const double e = std::exp(-t);
  const double c = std::cos(p.omega * t), s = std::sin(p.omega * t);
  return {e * c, -e * s, e * s, e * c};
}

}  // namespace escape_lab
