#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "thermoflock/analysis.hpp"
#include "thermoflock/diagnostics.hpp"
#include "thermoflock/integrate.hpp"
#include "thermoflock/scenario.hpp"

namespace thermoflock {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitInputError = 2, kExitIntegrationError = 3 };

struct CheckOutcome {
  std::string check;
  std::string model;  // "pbcs", "kbcs" or "both"
  std::string status; // "pass", "fail" or "skip"
  std::string detail;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<CheckOutcome> outcomes;
  std::vector<std::string> files;
  std::string report;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content, RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
  result.files.push_back(path.string());
}

inline CheckOutcome check_conservation(const Trajectory& traj, const std::vector<DiagnosticsRecord>& diag) {
  double mom = 0.0, energy = 0.0, centroid = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    mom = std::max(mom, diag[i].mom_residual);
    energy = std::max(energy, diag[i].energy_residual);
    centroid = std::max(centroid, conservation_residuals(traj.states[i], traj.T0).centroid);
  }
  const double worst = std::max({mom, energy, centroid});
  return {"conservation", std::string(to_string(traj.model)), worst <= 1e-10 ? "pass" : "fail",
          "max |sum u| = " + sci(mom) + ", max energy residual = " + sci(energy) + ", max |sum x| = " +
              sci(centroid) + " (limit 1e-10)"};
}

inline CheckOutcome check_entropy(const Trajectory& traj) {
  const EntropyCheck c = entropy_check(traj);
  return {"entropy", std::string(to_string(traj.model)), c.ok() ? "pass" : "fail",
          std::string("S ") + (c.monotone ? "non-decreasing" : "decreases") + " (worst drop " +
              sci(c.worst_drop) + "), min Sigma = " + sci(c.min_sigma) + ", finite-difference error " +
              sci(c.max_fd_rel_error) + " over " + std::to_string(c.fd_points) + " records (limit 1e-6)"};
}

inline CheckOutcome check_envelope(const Trajectory& traj) {
  const std::string model(to_string(traj.model));
  if (traj.model == Model::KBCS) {
    const Envelope env = flocking_envelope(traj.topology, traj.initial(), traj.T0);
    const EnvelopeReport v = envelope_check(traj, env, Functional::V);
    const EnvelopeReport e = envelope_check(traj, env, Functional::E);
    const std::string kind = traj.topology.is_metric() ? "metric kernel, Lambda0 = " + sci(env.rate)
                                                       : "exponential, rate " + sci(env.rate);
    return {"envelope", model, v.holds && e.holds ? "pass" : "fail",
            kind + "; max ratio V " + sci(v.max_ratio) + ", E " + sci(e.max_ratio) + " (limit 1 + 1e-6)"};
  }
  if (traj.topology.is_uniform()) {
    const double c = traj.topology.matrix()(0, 1);
    if (!(c > 0.0)) return {"envelope", model, "skip", "zero uniform weight"};
    const double rate = c / static_cast<double>(traj.initial().n);
    const EnvelopeReport v = envelope_check(traj, Envelope::exponential(rate), Functional::V);
    return {"envelope", model, v.holds ? "pass" : "fail",
            "uniform weight, V(t) <= V0 exp(-" + sci(rate) + " t); max ratio " + sci(v.max_ratio) +
                " (limit 1 + 1e-6)"};
  }
  return {"envelope", model, "skip", "no constant-free envelope for PB-CS with non-uniform weights"};
}

inline CheckOutcome check_nonmonotonicity(const Trajectory& traj) {
  std::ostringstream os;
  const std::pair<ParticleFunctional, const char*> kinds[] = {
      {ParticleFunctional::Speed, "|u|"}, {ParticleFunctional::Energy, "E"}, {ParticleFunctional::Temperature, "T"}};
  bool any = false;
  for (const auto& [which, label] : kinds) {
    for (const auto& ev : detect_nonmonotonicity(traj, which)) {
      os << (any ? "; " : "") << label << "_" << ev.particle + 1 << " rises on [" << ev.t_start << ", "
         << ev.t_end << "] and later falls";
      any = true;
    }
  }
  return {"nonmonotonicity", std::string(to_string(traj.model)), "pass", any ? os.str() : "none detected"};
}

inline std::string render_report(const Scenario& sc, const RunResult& r) {
  std::ostringstream os;
  os << "scenario: " << sc.name << "\n";
  os << "n = " << sc.n() << ", d = " << sc.d() << ", T0 = " << fmt17(sc.T0.value()) << "\n";
  os << "integrator: " << to_string(sc.integrator.scheme) << ", dt = " << sc.integrator.dt
     << ", t_end = " << sc.integrator.t_end << "\n";
  for (const auto& o : r.outcomes) os << o.status << "  " << o.check << " [" << o.model << "] " << o.detail << "\n";
  os << "result: " << (r.exit_code == kExitOk ? "all checks passed" : "FAILED") << "\n";
  return os.str();
}

}  // namespace detail

/// Integrates the scenario, writes traj_<model>.csv, diag_<model>.csv,
/// deviation.csv (both models) and report.txt into out_dir, and evaluates
/// the requested checks. Input and I/O problems throw; integration failures
/// are reported with exit code 3.
inline RunResult run(const Scenario& sc, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  RunResult result;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + out_dir.string() + "'");

  auto wants = [&](const std::string& c) { return std::find(sc.checks.begin(), sc.checks.end(), c) != sc.checks.end(); };
  std::vector<Trajectory> runs;
  for (Model m : models_of(sc.model)) {
    const std::string tag(to_string(m));
    try {
      runs.push_back(integrate(m, sc.initial, sc.topology, sc.T0, sc.integrator));
    } catch (const IntegrationError& e) {
      result.exit_code = kExitIntegrationError;
      result.outcomes.push_back({"integration", tag, "fail", e.what()});
      continue;
    }
    const Trajectory& traj = runs.back();
    const auto diag = diagnose(traj);
    std::ostringstream t, d;
    write_trajectory_csv(t, traj);
    write_diagnostics_csv(d, diag);
    detail::write_file(out_dir / ("traj_" + tag + ".csv"), t.str(), result);
    detail::write_file(out_dir / ("diag_" + tag + ".csv"), d.str(), result);

    if (wants("conservation")) result.outcomes.push_back(detail::check_conservation(traj, diag));
    if (wants("entropy")) result.outcomes.push_back(detail::check_entropy(traj));
    if (wants("envelope")) result.outcomes.push_back(detail::check_envelope(traj));
    if (wants("nonmonotonicity")) result.outcomes.push_back(detail::check_nonmonotonicity(traj));
  }

  if (wants("deviation") && result.exit_code != kExitIntegrationError) {
    if (sc.model != ModelSelection::Both || sc.topology.is_metric()) {
      result.outcomes.push_back({"deviation", "both", "skip", "needs both models and constant weights"});
    } else {
      const DeviationReport dev = deviation_experiment(sc.initial, sc.topology, sc.T0, sc.integrator);
      std::ostringstream os;
      write_deviation_csv(os, dev);
      detail::write_file(out_dir / "deviation.csv", os.str(), result);
      result.outcomes.push_back(
          {"deviation", "both", "pass",
           "eps = " + detail::sci(dev.epsilon) + (dev.small ? " (small)" : " (not small; bounds not checked)") +
               ", sup |du| = " + detail::sci(dev.sup_u) + ", sup |dE| = " + detail::sci(dev.sup_E) +
               ", C_u = " + detail::sci(dev.C_u) + " (fit " + detail::sci(dev.C_u_fit) + "), C_E = " +
               detail::sci(dev.C_E) + " (fit " + detail::sci(dev.C_E_fit) + ")"});
    }
  }

  if (result.exit_code == kExitOk)
    for (const auto& o : result.outcomes)
      if (o.status == "fail") result.exit_code = kExitCheckFailed;
  result.report = detail::render_report(sc, result);
  detail::write_file(out_dir / "report.txt", result.report, result);
  return result;
}

}  // namespace thermoflock
