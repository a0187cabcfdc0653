#pragma once

// Exit statistics: histograms, the closed-form exit-angle density and its
// moments, peak-period extraction, and winding-conditioned densities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "escape_lab/errors.hpp"
#include "escape_lab/fft.hpp"
#include "escape_lab/sde.hpp"

namespace escape_lab {

enum class Normalization { Counts, Density };

struct Histogram {
  std::vector<double> edges;        // m+1, strictly increasing
  std::vector<std::int64_t> counts; // m
  std::int64_t total = 0;           // sum(counts)
  std::int64_t population = 0;      // denominator for density (includes censored/overflow)
  std::int64_t censored = 0;
  std::int64_t overflow = 0;        // exited samples above the top edge
  Normalization normalization = Normalization::Counts;

  std::size_t size() const { return counts.size(); }
  double bin_width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }

  double density(std::size_t i) const {
    return static_cast<double>(counts[i]) /
           (static_cast<double>(population) * bin_width(i));
  }

  std::vector<double> densities() const {
    std::vector<double> d(size());
    for (std::size_t i = 0; i < size(); ++i) d[i] = density(i);
    return d;
  }

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += density(i) * bin_width(i);
    return s;
  }

  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += static_cast<double>(counts[i]) * center(i);
    return total ? s / static_cast<double>(total) : 0.0;
  }
};

struct BinningRule {
  int bins = 200;
  double lo = 0.0;
  // hi <= lo means "use the quantile of the data"
  double hi = -1.0;
  double quantile = 0.999;
};

inline Histogram build_histogram(std::vector<double> times, const BinningRule& rule = {}) {
  if (times.empty()) throw EmptyInput("build_histogram: no samples");
  double hi = rule.hi;
  if (!(hi > rule.lo)) {
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const double q = rule.quantile * static_cast<double>(sorted.size() - 1);
    const std::size_t k = static_cast<std::size_t>(q);
    hi = (k + 1 < sorted.size())
             ? sorted[k] + (q - static_cast<double>(k)) * (sorted[k + 1] - sorted[k])
             : sorted.back();
    if (!(hi > rule.lo)) hi = rule.lo + 1.0;
  }
  Histogram h;
  h.edges.resize(rule.bins + 1);
  for (int i = 0; i <= rule.bins; ++i)
    h.edges[i] = rule.lo + (hi - rule.lo) * static_cast<double>(i) / rule.bins;
  h.counts.assign(rule.bins, 0);
  const double width = (hi - rule.lo) / rule.bins;
  for (double t : times) {
    if (t < rule.lo) continue;
    if (t > hi) {
      ++h.overflow;
      continue;
    }
    auto b = static_cast<std::int64_t>((t - rule.lo) / width);
    if (b >= rule.bins) b = rule.bins - 1;  // top edge inclusive
    ++h.counts[static_cast<std::size_t>(b)];
  }
  h.total = 0;
  for (auto c : h.counts) h.total += c;
  h.population = static_cast<std::int64_t>(times.size());
  h.normalization = Normalization::Density;
  return h;
}

/// Histogram of exit times; censored records are excluded from the bins but
/// stay in the density denominator, so the integral is the binned exited
/// fraction.
inline Histogram build_histogram(const std::vector<ExitRecord>& records,
                                 const BinningRule& rule = {}) {
  std::vector<double> times;
  times.reserve(records.size());
  std::int64_t censored = 0;
  for (const auto& r : records) {
    if (r.status == TrajStatus::Exited)
      times.push_back(r.exit_time);
    else
      ++censored;
  }
  if (times.empty()) throw EmptyInput("build_histogram: all records censored");
  Histogram h = build_histogram(std::move(times), rule);
  h.censored = censored;
  h.population += censored;
  return h;
}

// ---------------------------------------------------------------------------
// Closed-form exit-angle density and moments

/// Unnormalized base (1 + 2 alpha cos(theta) + alpha^2)^{-3}.
inline double exit_density_base(double theta, double alpha) {
  const double b = 1.0 + 2.0 * alpha * std::cos(theta) + alpha * alpha;
  return 1.0 / (b * b * b);
}

/// Simpson normalizer of the base over (-pi, pi].
inline double exit_density_normalizer(double alpha, int n = 4096) {
  const double h = 2.0 * M_PI / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = -M_PI + i * h;
    s += exit_density_base(a, alpha) + 4.0 * exit_density_base(a + 0.5 * h, alpha) +
         exit_density_base(a + h, alpha);
  }
  return s * h / 6.0;
}

/// Closed form of the same normalizer; the alpha->1 display in the source
/// material, exact for this integrand.
inline double exit_density_normalizer_closed(double alpha) {
  const double a2 = alpha * alpha;
  const double om = 1.0 - a2;
  return 2.0 * M_PI * (a2 * a2 + 4.0 * a2 + 1.0) / (om * om * om * om * om);
}

inline double analytic_exit_density(double theta, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("analytic_exit_density: alpha must be in [0,1)");
  return exit_density_base(theta, alpha) / exit_density_normalizer(alpha);
}

struct ExitDensityMoments {
  double variance = 0.0;
  double std_dev = 0.0;
  double asymptotic_std = 0.0;  // 0.06 (1-alpha^2)^{5/2}
};

/// Variance of the angle around pi under the closed-form density, with the
/// periodic metric on (-pi, pi].
inline ExitDensityMoments exit_density_moments(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("exit_density_moments: alpha must be in (0,1)");
  const int n = 4096;
  const double h = 2.0 * M_PI / n;
  const double norm = exit_density_normalizer(alpha);
  auto f = [&](double th) {
    double d = th - M_PI;  // wrapped distance to pi
    while (d <= -M_PI) d += 2.0 * M_PI;
    while (d > M_PI) d -= 2.0 * M_PI;
    return d * d * exit_density_base(th, alpha) / norm;
  };
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = -M_PI + i * h;
    s += f(a) + 4.0 * f(a + 0.5 * h) + f(a + h);
  }
  ExitDensityMoments m;
  m.variance = s * h / 6.0;
  m.std_dev = std::sqrt(m.variance);
  m.asymptotic_std = 0.06 * std::pow(1.0 - alpha * alpha, 2.5);
  return m;
}

// ---------------------------------------------------------------------------
// Angular densities on a uniform periodic grid of cell centers over (-pi, pi]

struct AngularDensity {
  std::vector<double> theta_grid;  // cell centers
  std::vector<double> values;

  double cell_width() const { return 2.0 * M_PI / static_cast<double>(theta_grid.size()); }

  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_width();
  }

  void normalize() {
    const double s = integral();
    if (s > 0.0)
      for (double& v : values) v /= s;
  }
};

inline AngularDensity empirical_angular_density(const std::vector<ExitRecord>& records,
                                                int bins = 128) {
  AngularDensity d;
  d.theta_grid.resize(bins);
  d.values.assign(bins, 0.0);
  const double w = 2.0 * M_PI / bins;
  for (int i = 0; i < bins; ++i) d.theta_grid[i] = -M_PI + (i + 0.5) * w;
  std::int64_t n = 0;
  for (const auto& r : records) {
    if (r.status != TrajStatus::Exited) continue;
    int b = static_cast<int>((r.exit_angle + M_PI) / w);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    d.values[static_cast<std::size_t>(b)] += 1.0;
    ++n;
  }
  if (n == 0) throw EmptyInput("empirical_angular_density: no exited records");
  for (double& v : d.values) v /= static_cast<double>(n) * w;
  return d;
}

inline AngularDensity analytic_angular_density(double alpha, int bins = 128) {
  AngularDensity d;
  d.theta_grid.resize(bins);
  d.values.resize(bins);
  const double w = 2.0 * M_PI / bins;
  const double norm = exit_density_normalizer(alpha);
  for (int i = 0; i < bins; ++i) {
    d.theta_grid[i] = -M_PI + (i + 0.5) * w;
    d.values[i] = exit_density_base(d.theta_grid[i], alpha) / norm;
  }
  d.normalize();  // exact unit mass on this grid
  return d;
}

struct DensityDistance {
  double l1 = 0.0;
  double ks = 0.0;
};

inline DensityDistance density_distance(const AngularDensity& a, const AngularDensity& b) {
  if (a.theta_grid.size() != b.theta_grid.size())
    throw GridMismatch("density_distance: grids differ in size");
  for (std::size_t i = 0; i < a.theta_grid.size(); ++i)
    if (std::abs(a.theta_grid[i] - b.theta_grid[i]) > 1e-12)
      throw GridMismatch("density_distance: grids differ");
  const double w = a.cell_width();
  DensityDistance out;
  double cum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    out.l1 += std::abs(a.values[i] - b.values[i]) * w;
    cum += (a.values[i] - b.values[i]) * w;
    out.ks = std::max(out.ks, std::abs(cum));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Peak-period extraction

struct PeakPeriodResult {
  double period = 0.0;
  double confidence = 0.0;  // spectral peak over median floor
};

struct PeakPeriodOptions {
  double noise_floor_factor = 4.0;
  std::size_t pad_size = 4096;
};

/// Detrend the density by one fitted exponential, then locate the dominant
/// period of the residual spectrum. Empty when no peak clears the floor.
inline std::optional<PeakPeriodResult> peak_period(const Histogram& h,
                                                   const PeakPeriodOptions& opt = {}) {
  const std::size_t m = h.size();
  if (m < 8) return std::nullopt;
  std::vector<double> dens = h.densities();
  const double width = h.bin_width(0);

  // count-weighted linear fit of log(density): log d = c0 - c1 t
  double sw = 0, st = 0, stt = 0, sy = 0, sty = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (h.counts[i] <= 0) continue;
    const double wgt = static_cast<double>(h.counts[i]);
    const double t = h.center(i), y = std::log(dens[i]);
    sw += wgt;
    st += wgt * t;
    stt += wgt * t * t;
    sy += wgt * y;
    sty += wgt * t * y;
  }
  const double det = sw * stt - st * st;
  if (std::abs(det) < 1e-300 || sw <= 0) return std::nullopt;
  const double c0 = (stt * sy - st * sty) / det;
  const double c1 = -(sw * sty - st * sy) / det;

  std::size_t n = opt.pad_size;
  while (n < 2 * m) n <<= 1;
  std::vector<std::complex<double>> buf(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    buf[i] = dens[i] - std::exp(c0 - c1 * h.center(i));
  fft_inplace(buf);

  const std::size_t half = n / 2;
  std::vector<double> mag(half);
  for (std::size_t k = 1; k < half; ++k) mag[k] = std::abs(buf[k]);
  std::vector<double> tmp(mag.begin() + 1, mag.end());
  std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
  const double med = tmp[tmp.size() / 2];
  std::size_t k0 = 1;
  for (std::size_t k = 2; k < half; ++k)
    if (mag[k] > mag[k0]) k0 = k;
  if (med <= 0.0 || mag[k0] < opt.noise_floor_factor * med) return std::nullopt;

  double shift = 0.0;  // parabolic peak interpolation
  if (k0 + 1 < half && k0 >= 2) {
    const double y1 = mag[k0 - 1], y2 = mag[k0], y3 = mag[k0 + 1];
    const double den2 = y1 - 2.0 * y2 + y3;
    if (std::abs(den2) > 1e-300) shift = 0.5 * (y1 - y3) / den2;
  }
  const double freq = (static_cast<double>(k0) + shift) / (static_cast<double>(n) * width);
  if (freq <= 0.0) return std::nullopt;
  return PeakPeriodResult{1.0 / freq, mag[k0] / med};
}

// ---------------------------------------------------------------------------
// Winding-conditioned histograms

/// One histogram per winding class, on the unconditioned histogram's edges.
inline std::map<std::int64_t, Histogram> winding_conditioned(
    const std::vector<ExitRecord>& records, const BinningRule& rule = {}) {
  if (records.empty()) throw EmptyInput("winding_conditioned: no records");
  const Histogram all = build_histogram(records, rule);
  BinningRule fixed = rule;
  fixed.lo = all.edges.front();
  fixed.hi = all.edges.back();
  std::map<std::int64_t, std::vector<double>> split;
  for (const auto& r : records)
    if (r.status == TrajStatus::Exited) split[r.winding_count].push_back(r.exit_time);
  std::map<std::int64_t, Histogram> out;
  for (auto& [w, times] : split) out.emplace(w, build_histogram(std::move(times), fixed));
  return out;
}

// ---------------------------------------------------------------------------
// Peak-shape metrics used by the regime diagnostics

struct PeakMetrics {
  int significant_peaks = 0;
  double first_peak_mass = 0.0;  // fraction of exited mass up to the first trough
};

struct PeakMetricsOptions {
  double prominence_frac = 0.05;   // of the smoothed maximum
  double trough_height_frac = 0.5; // trough must drop below this fraction of the peak
};

inline PeakMetrics peak_metrics(const Histogram& h, const PeakMetricsOptions& opt = {}) {
  const std::size_t m = h.size();
  PeakMetrics out;
  if (m < 5) return out;
  std::vector<double> d = h.densities();
  std::vector<double> s(m);
  for (std::size_t i = 0; i < m; ++i) {  // 3-bin moving average, applied twice
    const double a = d[i > 0 ? i - 1 : 0], b = d[i], c = d[i + 1 < m ? i + 1 : m - 1];
    s[i] = (a + b + c) / 3.0;
  }
  std::vector<double> s2(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = s[i > 0 ? i - 1 : 0], b = s[i], c = s[i + 1 < m ? i + 1 : m - 1];
    s2[i] = (a + b + c) / 3.0;
  }
  const double peak_floor = opt.prominence_frac * *std::max_element(s2.begin(), s2.end());

  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < m; ++i)
    if (s2[i] >= s2[i - 1] && s2[i] > s2[i + 1]) maxima.push_back(i);

  std::vector<std::size_t> significant;
  for (std::size_t idx : maxima) {
    // prominence: drop to the deepest saddle separating this max from a higher one
    double left_min = s2[idx], right_min = s2[idx];
    for (std::size_t j = idx; j-- > 0;) {
      if (s2[j] > s2[idx]) break;
      left_min = std::min(left_min, s2[j]);
    }
    for (std::size_t j = idx + 1; j < m; ++j) {
      if (s2[j] > s2[idx]) break;
      right_min = std::min(right_min, s2[j]);
    }
    const double prominence = s2[idx] - std::max(left_min, right_min);
    if (prominence >= peak_floor) significant.push_back(idx);
  }
  out.significant_peaks = static_cast<int>(significant.size());

  const std::size_t first =
      significant.empty()
          ? static_cast<std::size_t>(std::max_element(s2.begin(), s2.end()) - s2.begin())
          : significant.front();
  std::size_t trough = m - 1;
  for (std::size_t i = first + 1; i + 1 < m; ++i) {
    if (s2[i] <= s2[i - 1] || i == first + 1) continue;
    if (s2[i - 1] < opt.trough_height_frac * s2[first] && s2[i] > s2[i - 1]) {
      trough = i - 1;
      break;
    }
  }
  std::int64_t mass = 0;
  for (std::size_t i = 0; i <= trough; ++i) mass += h.counts[i];
  const std::int64_t exited = h.total + h.overflow;
  out.first_peak_mass = exited ? static_cast<double>(mass) / static_cast<double>(exited) : 0.0;
  return out;
}

}  // namespace escape_lab
