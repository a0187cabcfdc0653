#pragma once

// Batch front door: parse one JSON run manifest, dispatch the pipeline, and
// write CSV/JSON artifacts plus a run.json provenance echo. Outputs are a pure
// function of (manifest, seed), so reruns are byte-identical at any thread
// count.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "escape_lab/io.hpp"

namespace escape_lab {

enum class RunStatus : int { Ok = 0, ManifestInvalid = 2, ComputeError = 3, WriteError = 4 };

struct RunManifest {
  std::string command;
  FieldParams params;
  NeuroParams neuro_params = demo_neuro_params();
  SimConfig sim;
  NeuroSimConfig neuro_sim;
  NeuroState neuro_init{20.0, 0.21};
  // eikonal
  std::vector<double> alpha_grid;
  double delta = 1e-3;
  double theta0 = M_PI;
  // fit / report
  std::string records_path;
  int bins = 200;
  std::string output_dir = ".";
  int format_version = kFormatVersion;
  nlohmann::ordered_json raw;
};

namespace manifest_detail {

inline void parse_field_params(const nlohmann::json& j, FieldParams& p) {
  if (j.contains("alpha")) p.alpha = j.at("alpha").get<double>();
  if (j.contains("omega")) p.omega = j.at("omega").get<double>();
  if (j.contains("lambda")) p.lambda = j.at("lambda").get<double>();
  if (j.contains("eps")) p.eps = j.at("eps").get<double>();
  p.validate();
}

inline void parse_neuro_params(const nlohmann::json& j, NeuroParams& p) {
  if (j.contains("tau")) p.tau = j.at("tau").get<double>();
  if (j.contains("J")) p.J = j.at("J").get<double>();
  if (j.contains("U")) p.U = j.at("U").get<double>();
  if (j.contains("t_r")) p.t_r = j.at("t_r").get<double>();
  if (j.contains("T")) p.T = j.at("T").get<double>();
  if (j.contains("gain")) p.gain = j.at("gain").get<double>();
  if (j.contains("sigma")) p.sigma = j.at("sigma").get<double>();
  if (j.contains("depression_scales_with_mu"))
    p.depression_scales_with_mu = j.at("depression_scales_with_mu").get<bool>();
  p.validate();
}

inline void parse_sim(const nlohmann::json& j, SimConfig& s) {
  if (j.contains("dt")) s.dt = j.at("dt").get<double>();
  if (j.contains("t_max")) s.t_max = j.at("t_max").get<double>();
  if (j.contains("n_traj")) s.n_traj = j.at("n_traj").get<std::int64_t>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("init")) {
    const auto& init = j.at("init");
    if (init.is_string() && init.get<std::string>() == "uniform-disk")
      s.init = UniformDiskInit{};
    else if (init.is_array() && init.size() == 2)
      s.init = PlanePoint{init[0].get<double>(), init[1].get<double>()};
    else
      throw std::invalid_argument("sim.init must be [x, y] or \"uniform-disk\"");
  }
  s.validate();
}

}  // namespace manifest_detail

inline RunManifest parse_manifest(const nlohmann::ordered_json& j) {
  RunManifest m;
  m.raw = j;
  if (j.contains("format_version")) {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion)
      throw std::invalid_argument("manifest: unsupported format_version " +
                                  std::to_string(m.format_version));
  }
  if (!j.contains("command")) throw std::invalid_argument("manifest: missing command");
  m.command = j.at("command").get<std::string>();
  static const char* known[] = {"simulate", "exit-density", "eikonal", "spectral",
                                "fit",      "neuro",        "report"};
  bool ok = false;
  for (const char* k : known) ok = ok || m.command == k;
  if (!ok) throw std::invalid_argument("manifest: unknown command " + m.command);

  if (j.contains("params")) manifest_detail::parse_field_params(j.at("params"), m.params);
  if (j.contains("neuro_params"))
    manifest_detail::parse_neuro_params(j.at("neuro_params"), m.neuro_params);
  if (j.contains("sim")) manifest_detail::parse_sim(j.at("sim"), m.sim);
  if (j.contains("neuro_sim")) {
    const auto& ns = j.at("neuro_sim");
    if (ns.contains("dt")) m.neuro_sim.dt = ns.at("dt").get<double>();
    if (ns.contains("t_max")) m.neuro_sim.t_max = ns.at("t_max").get<double>();
    if (ns.contains("n_traj")) m.neuro_sim.n_traj = ns.at("n_traj").get<std::int64_t>();
    if (ns.contains("seed")) m.neuro_sim.seed = ns.at("seed").get<std::uint64_t>();
    if (!(m.neuro_sim.dt > 0) || m.neuro_sim.n_traj < 1)
      throw std::invalid_argument("manifest: invalid neuro_sim block");
  }
  if (j.contains("neuro_init")) {
    m.neuro_init.V = j.at("neuro_init").at(0).get<double>();
    m.neuro_init.mu = j.at("neuro_init").at(1).get<double>();
  }
  if (j.contains("eikonal")) {
    const auto& e = j.at("eikonal");
    if (e.contains("alpha_grid")) m.alpha_grid = e.at("alpha_grid").get<std::vector<double>>();
    if (e.contains("delta")) m.delta = e.at("delta").get<double>();
    if (e.contains("theta0")) m.theta0 = e.at("theta0").get<double>();
  }
  if (j.contains("records_path")) m.records_path = j.at("records_path").get<std::string>();
  if (j.contains("bins")) m.bins = j.at("bins").get<int>();
  if (j.contains("output_dir")) m.output_dir = j.at("output_dir").get<std::string>();
  return m;
}

inline RunManifest parse_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::ordered_json j;
  in >> j;
  return parse_manifest(j);
}

namespace manifest_detail {

inline void write_run_echo(const std::filesystem::path& dir, const RunManifest& m,
                           std::uint64_t master_seed) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["tool_version"] = kVersion;
  j["master_seed"] = master_seed;
  j["manifest"] = m.raw;
  write_text_file((dir / "run.json").string(), j.dump(2) + "\n");
}

}  // namespace manifest_detail

/// Execute one manifest. Artifacts land in output_dir (created if needed).
inline RunStatus run(RunManifest m, const std::string& output_override = "", int threads = 0,
                     std::optional<std::uint64_t> seed_override = std::nullopt) {
  namespace fs = std::filesystem;
  try {
    const fs::path dir = output_override.empty() ? fs::path(m.output_dir) : fs::path(output_override);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output dir: " + dir.string());
    if (seed_override) {
      m.sim.seed = *seed_override;
      m.neuro_sim.seed = *seed_override;
    }

    if (m.command == "simulate") {
      const auto records = run_ensemble(m.sim, m.params, threads);
      write_text_file((dir / "records.csv").string(), records_to_csv(records));
      BinningRule rule;
      rule.bins = m.bins;
      write_text_file((dir / "histogram.csv").string(),
                      histogram_to_csv(build_histogram(records, rule)));
      manifest_detail::write_run_echo(dir, m, m.sim.seed);
    } else if (m.command == "exit-density") {
      const auto records = run_ensemble(m.sim, m.params, threads);
      const auto emp = empirical_angular_density(records, m.bins);
      const auto ana = analytic_angular_density(m.params.alpha, m.bins);
      write_text_file((dir / "angular.csv").string(), angular_to_csv(emp, ana));
      write_text_file((dir / "records.csv").string(), records_to_csv(records));
      manifest_detail::write_run_echo(dir, m, m.sim.seed);
    } else if (m.command == "eikonal") {
      std::vector<double> grid = m.alpha_grid;
      if (grid.empty()) grid = {m.params.alpha};
      std::vector<ScanRow> rows;
      if (std::abs(m.theta0 - M_PI) < 1e-15) {
        rows = psi_hat_scan(grid, m.params, m.delta);
      } else {
        for (double a : grid) {
          FieldParams p = m.params;
          p.alpha = a;
          const ShotResult r = shoot(p, m.delta, m.theta0);
          rows.push_back({a, m.theta0, r.t_arrival, r.psi_hat, r.winding_count, r.hit_angle,
                          r.hamiltonian_drift});
        }
      }
      write_text_file((dir / "eikonal.csv").string(), eikonal_to_csv(rows));
      manifest_detail::write_run_echo(dir, m, m.sim.seed);
    } else if (m.command == "spectral") {
      const SpectralReport rep = make_spectral_report(m.params);
      write_text_file((dir / "spectral.json").string(),
                      spectral_report_to_json(rep).dump(2) + "\n");
      write_text_file((dir / "xi_profile.csv").string(),
                      xi_profile_to_csv(bernoulli_xi(m.params)));
      manifest_detail::write_run_echo(dir, m, m.sim.seed);
    } else if (m.command == "fit" || m.command == "report") {
      std::vector<ExitRecord> records;
      if (!m.records_path.empty())
        records = read_records_csv(m.records_path);
      else
        records = run_ensemble(m.sim, m.params, threads);
      std::int64_t exited = 0;
      for (const auto& r : records) exited += r.status == TrajStatus::Exited;
      if (exited < 1000)
        throw InsufficientData("fit/report: fewer than 1e3 exited records");
      BinningRule rule;
      rule.bins = m.bins;
      const Histogram h = build_histogram(records, rule);
      const FitResult f = fit_two_term(h);
      write_text_file((dir / "fit.json").string(), fit_result_to_json(f).dump(2) + "\n");
      write_text_file((dir / "theory_report.txt").string(),
                      theory_report_to_text(theory_report(f, m.params)));
      if (m.command == "report") {
        nlohmann::ordered_json j;
        j["format_version"] = kFormatVersion;
        j["fit"] = fit_result_to_json(f);
        const auto rows = theory_report(f, m.params);
        j["theory"] = nlohmann::ordered_json::array();
        for (const auto& r : rows)
          j["theory"].push_back({{"quantity", r.quantity},
                                 {"theory", r.theory},
                                 {"fitted", r.fitted},
                                 {"rel_error", r.rel_error}});
        const RegimeResult reg = regime(m.params);
        j["eta"] = reg.eta;
        j["regime"] = regime_name(reg.label);
        if (auto pp = peak_period(h)) {
          j["peak_period"] = pp->period;
          j["peak_confidence"] = pp->confidence;
        } else {
          j["peak_period"] = nullptr;
        }
        write_text_file((dir / "report.json").string(), j.dump(2) + "\n");
      }
      manifest_detail::write_run_echo(dir, m, m.sim.seed);
    } else if (m.command == "neuro") {
      const CriticalSet cs = critical_points(m.neuro_params);
      write_text_file((dir / "critical_points.json").string(),
                      critical_set_to_json(cs).dump(2) + "\n");
      const LimitCycle cyc = limit_cycle(m.neuro_params);
      write_text_file((dir / "limit_cycle.json").string(),
                      limit_cycle_to_json(cyc, 8).dump(2) + "\n");
      const auto records =
          simulate_upstate_ensemble(m.neuro_params, m.neuro_init, m.neuro_sim, cyc, threads);
      write_text_file((dir / "records.csv").string(), records_to_csv(records));
      BinningRule rule;
      rule.bins = m.bins;
      write_text_file((dir / "histogram.csv").string(),
                      histogram_to_csv(build_histogram(records, rule)));
      manifest_detail::write_run_echo(dir, m, m.neuro_sim.seed);
    }
    return RunStatus::Ok;
  } catch (const IoError&) {
    return RunStatus::WriteError;
  } catch (const std::invalid_argument&) {
    return RunStatus::ManifestInvalid;
  } catch (const std::exception&) {
    return RunStatus::ComputeError;
  }
}

}  // namespace escape_lab
