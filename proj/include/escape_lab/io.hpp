#pragma once

// CSV and JSON artifact writers/readers. Numbers are printed with %.17g so a
// rerun of the same manifest reproduces files byte for byte.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "escape_lab/eikonal.hpp"
#include "escape_lab/fitter.hpp"
#include "escape_lab/neuro.hpp"
#include "escape_lab/sde.hpp"
#include "escape_lab/spectral.hpp"
#include "escape_lab/stats.hpp"
#include "escape_lab/version.hpp"

namespace escape_lab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string fmt_g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_banner() {
  return "# escape-lab csv format_version=" + std::to_string(kFormatVersion) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Exit records

inline std::string records_to_csv(const std::vector<ExitRecord>& records) {
  std::string s = csv_banner();
  s += "traj_index,exit_time,exit_angle,winding_count,status\n";
  for (const auto& r : records) {
    s += std::to_string(r.traj_index);
    s += ',';
    s += fmt_g17(r.exit_time);
    s += ',';
    s += r.status == TrajStatus::Exited ? fmt_g17(r.exit_angle) : std::string();
    s += ',';
    s += std::to_string(r.winding_count);
    s += ',';
    s += r.status == TrajStatus::Exited ? "Exited" : "Censored";
    s += '\n';
  }
  return s;
}

inline std::vector<ExitRecord> records_from_csv(std::istream& in) {
  std::vector<ExitRecord> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("format_version=");
      if (pos != std::string::npos) {
        const int v = std::atoi(line.c_str() + pos + 15);
        if (v != kFormatVersion)
          throw IoError("records csv: unsupported format_version " + std::to_string(v));
      }
      continue;
    }
    if (!header_seen) {
      if (line != "traj_index,exit_time,exit_angle,winding_count,status")
        throw IoError("records csv: unexpected header: " + line);
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    ExitRecord r;
    std::getline(ss, field, ',');
    r.traj_index = std::atoll(field.c_str());
    std::getline(ss, field, ',');
    r.exit_time = std::atof(field.c_str());
    std::getline(ss, field, ',');
    r.exit_angle = field.empty() ? std::nan("") : std::atof(field.c_str());
    std::getline(ss, field, ',');
    r.winding_count = std::atoll(field.c_str());
    std::getline(ss, field, ',');
    r.status = field == "Exited" ? TrajStatus::Exited : TrajStatus::Censored;
    out.push_back(r);
  }
  if (!header_seen) throw IoError("records csv: missing header");
  return out;
}

inline std::vector<ExitRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return records_from_csv(in);
}

// ---------------------------------------------------------------------------
// Histograms, angular densities, eikonal tables, xi profiles

inline std::string histogram_to_csv(const Histogram& h) {
  std::string s = csv_banner();
  s += "bin_left,bin_right,count,density\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    s += fmt_g17(h.edges[i]);
    s += ',';
    s += fmt_g17(h.edges[i + 1]);
    s += ',';
    s += std::to_string(h.counts[i]);
    s += ',';
    s += fmt_g17(h.density(i));
    s += '\n';
  }
  return s;
}

inline std::string angular_to_csv(const AngularDensity& emp, const AngularDensity& ana) {
  std::string s = csv_banner();
  s += "theta,density_empirical,density_analytic\n";
  for (std::size_t i = 0; i < emp.theta_grid.size(); ++i) {
    s += fmt_g17(emp.theta_grid[i]);
    s += ',';
    s += fmt_g17(emp.values[i]);
    s += ',';
    s += fmt_g17(ana.values[i]);
    s += '\n';
  }
  return s;
}

inline std::string eikonal_to_csv(const std::vector<ScanRow>& rows) {
  std::string s = csv_banner();
  s += "alpha,theta0,t_arrival,psi_hat,winding,hit_angle\n";
  for (const auto& r : rows) {
    s += fmt_g17(r.alpha);
    s += ',';
    s += fmt_g17(r.theta0);
    s += ',';
    s += fmt_g17(r.t_arrival);
    s += ',';
    s += fmt_g17(r.psi_hat);
    s += ',';
    s += std::to_string(r.winding);
    s += ',';
    s += fmt_g17(r.hit_angle);
    s += '\n';
  }
  return s;
}

inline std::string xi_profile_to_csv(const PeriodicSolution& sol) {
  std::string s = csv_banner();
  s += "theta,xi,z\n";
  for (std::size_t i = 0; i < sol.theta_grid.size(); ++i) {
    s += fmt_g17(sol.theta_grid[i]);
    s += ',';
    s += fmt_g17(sol.xi[i]);
    s += ',';
    s += fmt_g17(sol.z[i]);
    s += '\n';
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON reports

inline nlohmann::ordered_json spectral_report_to_json(const SpectralReport& r) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["omega1"] = r.omega1;
  j["omega2"] = r.omega2;
  j["lambda2"] = {{"decay", r.lambda2.decay}, {"frequency", r.lambda2.frequency}};
  j["lambda0_estimate"] = r.lambda0_estimate;
  j["mfpt_taualpha"] = r.mfpt_taualpha;
  j["mfpt_af"] = r.mfpt_af;
  j["eta"] = r.eta;
  j["regime"] = regime_name(r.regime_label);
  j["lambda0_reference"] = {{"tau_alpha", kLambda0ReferenceTauAlpha},
                            {"af", kLambda0ReferenceAF}};
  return j;
}

inline nlohmann::ordered_json fit_result_to_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["k1"] = f.k1;
  j["k2"] = f.k2;
  j["k3"] = f.k3;
  j["k4"] = f.k4;
  j["k5"] = f.k5;
  j["k6"] = f.k6;
  j["residual_norm"] = f.residual_norm;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  return j;
}

inline std::string theory_report_to_text(const std::vector<TheoryRow>& rows) {
  std::string s = "quantity      theory        fitted        rel_error\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s  %-12.6g  %-12.6g  %.4g\n", r.quantity.c_str(),
                  r.theory, r.fitted, r.rel_error);
    s += buf;
  }
  return s;
}

inline const char* critical_kind_name(CriticalKind k) {
  switch (k) {
    case CriticalKind::StableNode: return "StableNode";
    case CriticalKind::StableFocus: return "StableFocus";
    default: return "Saddle";
  }
}

inline nlohmann::ordered_json critical_set_to_json(const CriticalSet& cs) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["points"] = nlohmann::ordered_json::array();
  for (const auto& c : cs.points) {
    j["points"].push_back({{"V", c.state.V},
                           {"mu", c.state.mu},
                           {"kind", critical_kind_name(c.kind)},
                           {"eig_real", c.eig_real},
                           {"eig_imag", c.eig_imag}});
  }
  return j;
}

inline nlohmann::ordered_json limit_cycle_to_json(const LimitCycle& cyc, int stride = 1) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["period"] = cyc.period;
  j["closure_gap"] = cyc.closure_gap;
  j["focus"] = {{"V", cyc.focus.V}, {"mu", cyc.focus.mu}};
  auto pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cyc.polyline.size(); i += static_cast<std::size_t>(stride))
    pts.push_back({cyc.polyline[i].V, cyc.polyline[i].mu});
  pts.push_back({cyc.polyline.back().V, cyc.polyline.back().mu});
  j["polyline"] = std::move(pts);
  return j;
}

}  // namespace escape_lab
