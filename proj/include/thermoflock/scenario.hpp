#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "thermoflock/analysis.hpp"
#include "thermoflock/diagnostics.hpp"
#include "thermoflock/integrate.hpp"
#include "thermoflock/models.hpp"
#include "thermoflock/state.hpp"
#include "thermoflock/topology.hpp"

namespace thermoflock {

enum class ModelSelection { PBCS, KBCS, Both };

inline std::string_view to_string(ModelSelection m) {
  switch (m) {
    case ModelSelection::PBCS:
      return "pbcs";
    case ModelSelection::KBCS:
      return "kbcs";
    case ModelSelection::Both:
      return "both";
  }
  return "both";
}

inline ModelSelection parse_model_selection(std::string_view s) {
  if (s == "both") return ModelSelection::Both;
  return parse_model(s) == Model::PBCS ? ModelSelection::PBCS : ModelSelection::KBCS;
}

inline std::vector<Model> models_of(ModelSelection m) {
  if (m == ModelSelection::Both) return {Model::PBCS, Model::KBCS};
  return {m == ModelSelection::PBCS ? Model::PBCS : Model::KBCS};
}

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"conservation", "entropy", "envelope", "deviation",
                                              "nonmonotonicity"};
  return names;
}

/// A validated run description. `raw` is the state as written in the file;
/// `initial` is the prepared state actually integrated.
struct Scenario {
  std::string name;
  std::string description;
  ModelSelection model = ModelSelection::Both;
  Topology topology = Topology::uniform(2);
  MixtureState raw;
  std::optional<double> fixed_T0;  // empty: derive
  IntegratorConfig integrator;
  std::vector<std::string> checks;

  MixtureState initial;
  ReferenceTemperature T0{1.0};

  std::size_t n() const { return initial.n; }
  std::size_t d() const { return initial.d; }
};

/// Moves `raw` to the rest frame and fixes T0. A prescribed T0 must agree
/// with the mean total energy within 1e-9.
inline void prepare(Scenario& sc) {
  require_admissible(sc.raw);
  sc.topology.check_compatible(sc.raw);
  sc.initial = normalize_frame(sc.raw);
  const ReferenceTemperature derived = derive_T0(sc.initial);
  if (sc.fixed_T0) {
    if (std::abs(*sc.fixed_T0 - derived.value()) > 1e-9) {
      std::ostringstream os;
      os.precision(17);
      os << "t0: fixed value " << *sc.fixed_T0 << " disagrees with the mean total energy "
         << derived.value();
      throw InputError(os.str());
    }
    sc.T0 = ReferenceTemperature(*sc.fixed_T0);
  } else {
    sc.T0 = derived;
  }
  for (const auto& c : sc.checks)
    if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end())
      throw InputError("checks: unknown check '" + c + "'");
  sc.integrator.validate();
}

// ---------------------------------------------------------------------------
// JSON form.

namespace detail {

using nlohmann::json;

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw InputError(path + key + ": missing field");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path + ": expected a number");
  return j.get<double>();
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Accepts [[..], [..]] or, for one dimension, a flat list.
inline std::vector<std::vector<double>> vector_rows(const json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path + ": expected an array");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (j[i].is_array())
      out.push_back(number_list(j[i], at));
    else
      out.push_back({number(j[i], at)});
  }
  return out;
}

inline Topology parse_topology(const json& j) {
  if (!j.is_object()) throw InputError("topology: expected an object");
  if (j.contains("matrix")) {
    std::vector<std::vector<double>> rows;
    const json& m = j.at("matrix");
    if (!m.is_array()) throw InputError("topology.matrix: expected an array of rows");
    for (std::size_t i = 0; i < m.size(); ++i)
      rows.push_back(number_list(m[i], "topology.matrix[" + std::to_string(i) + "]"));
    try {
      return Topology::constant(Matrix::from_rows(rows));
    } catch (const InputError& e) {
      throw InputError(std::string("topology.matrix: ") + e.what());
    }
  }
  if (j.contains("metric")) {
    const double lambda = number(field(j.at("metric"), "lambda", "topology.metric."), "topology.metric.lambda");
    try {
      return Topology::metric(lambda);
    } catch (const InputError& e) {
      throw InputError(std::string("topology.metric.lambda: ") + e.what());
    }
  }
  throw InputError("topology: expected 'matrix' or 'metric'");
}

inline json rows_json(const std::vector<double>& flat, std::size_t n, std::size_t d) {
  json out = json::array();
  for (std::size_t a = 0; a < n; ++a) {
    json row = json::array();
    for (std::size_t k = 0; k < d; ++k) row.push_back(flat[a * d + k]);
    out.push_back(row);
  }
  return out;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::field;
  if (!j.is_object()) throw InputError("scenario: expected a JSON object");
  Scenario sc;
  sc.name = j.value("name", std::string("scenario"));
  sc.description = j.value("description", std::string());
  try {
    sc.model = parse_model_selection(j.value("model", std::string("both")));
  } catch (const InputError& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  sc.topology = detail::parse_topology(field(j, "topology", ""));

  const auto& init = field(j, "initial", "");
  const auto xs = detail::vector_rows(field(init, "x", "initial."), "initial.x");
  const auto us = detail::vector_rows(field(init, "u", "initial."), "initial.u");
  const auto Ts = detail::number_list(field(init, "T", "initial."), "initial.T");
  try {
    sc.raw = MixtureState::from_rows(xs, us, Ts);
    check_shape(sc.raw);
  } catch (const InputError& e) {
    throw InputError(std::string("initial: ") + e.what());
  }
  if (j.contains("dimension")) {
    const double dim = detail::number(j.at("dimension"), "dimension");
    if (dim != static_cast<double>(sc.raw.d))
      throw InputError("dimension: declared " + j.at("dimension").dump() + " but initial data have " +
                       std::to_string(sc.raw.d));
  }
  for (std::size_t a = 0; a < sc.raw.n; ++a)
    if (!(sc.raw.T[a] > kTemperatureFloor))
      throw InputError("initial.T[" + std::to_string(a) + "]: temperature must be positive");

  if (j.contains("t0")) {
    const auto& t0 = j.at("t0");
    if (t0.is_string()) {
      if (t0.get<std::string>() != "derive") throw InputError("t0: expected \"derive\" or {\"fixed\": value}");
    } else {
      sc.fixed_T0 = detail::number(field(t0, "fixed", "t0."), "t0.fixed");
    }
  }

  if (j.contains("integrator")) {
    const auto& in = j.at("integrator");
    if (!in.is_object()) throw InputError("integrator: expected an object");
    if (in.contains("scheme")) {
      try {
        sc.integrator.scheme = parse_scheme(in.at("scheme").get<std::string>());
      } catch (const std::exception& e) {
        throw InputError(std::string("integrator.scheme: ") + e.what());
      }
    }
    if (in.contains("dt")) sc.integrator.dt = detail::number(in.at("dt"), "integrator.dt");
    if (in.contains("t_end")) sc.integrator.t_end = detail::number(in.at("t_end"), "integrator.t_end");
    if (in.contains("record_every")) {
      const auto& r = in.at("record_every");
      if (!r.is_number_unsigned() || r.get<std::size_t>() < 1)
        throw InputError("integrator.record_every: expected a positive integer");
      sc.integrator.record_every = r.get<std::size_t>();
    }
  }
  if (j.contains("checks")) {
    const auto& c = j.at("checks");
    if (!c.is_array()) throw InputError("checks: expected an array of names");
    for (const auto& name : c) {
      if (!name.is_string()) throw InputError("checks: expected an array of names");
      sc.checks.push_back(name.get<std::string>());
    }
  }
  prepare(sc);
  return sc;
}

inline Scenario parse_scenario(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(std::string_view(buf.str()));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline nlohmann::json to_json(const Scenario& sc) {
  using nlohmann::json;
  json j;
  j["name"] = sc.name;
  if (!sc.description.empty()) j["description"] = sc.description;
  j["model"] = std::string(to_string(sc.model));
  j["dimension"] = sc.raw.d;
  if (sc.topology.is_metric())
    j["topology"] = {{"metric", {{"lambda", sc.topology.lambda()}}}};
  else
    j["topology"] = {{"matrix", sc.topology.matrix().to_rows()}};
  j["initial"] = {{"x", detail::rows_json(sc.raw.x, sc.raw.n, sc.raw.d)},
                  {"u", detail::rows_json(sc.raw.u, sc.raw.n, sc.raw.d)},
                  {"T", sc.raw.T}};
  if (sc.fixed_T0)
    j["t0"] = {{"fixed", *sc.fixed_T0}};
  else
    j["t0"] = "derive";
  j["integrator"] = {{"scheme", std::string(to_string(sc.integrator.scheme))},
                     {"dt", sc.integrator.dt},
                     {"t_end", sc.integrator.t_end},
                     {"record_every", sc.integrator.record_every}};
  j["checks"] = sc.checks;
  return j;
}

// ---------------------------------------------------------------------------
// Built-in scenarios.

struct BuiltinInfo {
  std::string name;
  std::string description;
};

inline const std::vector<BuiltinInfo>& list_builtins() {
  static const std::vector<BuiltinInfo> all{
      {"case-a", "three particles, uniform weight 1, one cold particle (T = 3, 0.01, 3)"},
      {"case-b-1", "four particles in two tight pairs, u = (2, 1.1, -1.1, -2)"},
      {"case-b-2", "four particles in two tight pairs, u = (1, 2, -1, -2)"},
      {"prop52", "PB-CS velocity fluctuation grows initially: u = (4, 3, -7), T = (2, 1, 1)"},
      {"prop53", "PB-CS energy fluctuation grows initially: u = (1, -2, 1), T = (2, 1, 1)"},
      {"uniform-oracle", "KB-CS with uniform weight 1, compared against the exact solution"},
  };
  return all;
}

namespace detail {

inline Scenario make_scenario(std::string name, ModelSelection model, Topology topo, MixtureState raw,
                              double dt, double t_end, std::vector<std::string> checks) {
  Scenario sc;
  sc.name = name;
  for (const auto& b : list_builtins())
    if (b.name == name) sc.description = b.description;
  sc.model = model;
  sc.topology = std::move(topo);
  sc.raw = std::move(raw);
  sc.integrator = IntegratorConfig{Scheme::RK4, dt, t_end, 1};
  sc.checks = std::move(checks);
  prepare(sc);
  return sc;
}

inline Matrix case_b_matrix() {
  return Matrix{{0, 100, 1, 1}, {100, 0, 1, 1}, {1, 1, 0, 100}, {1, 1, 100, 0}};
}

}  // namespace detail

inline Scenario builtin(std::string_view name) {
  using detail::make_scenario;
  const std::vector<std::string> single{"conservation", "entropy", "envelope", "nonmonotonicity"};
  const std::vector<std::string> paired{"conservation", "entropy", "envelope", "deviation", "nonmonotonicity"};
  if (name == "case-a")
    return make_scenario("case-a", ModelSelection::Both, Topology::uniform(3),
                         MixtureState::line({0.2108, -0.3500, 0.1392}, {1, 2, -3}, {3, 0.01, 3}), 1e-3, 10.0,
                         paired);
  if (name == "case-b-1")
    return make_scenario("case-b-1", ModelSelection::Both, Topology::constant(detail::case_b_matrix()),
                         MixtureState::line({0.3709, -0.1899, 0.2992, -0.4802}, {2, 1.1, -1.1, -2}, {1, 0.1, 1, 1}),
                         1e-4, 2.0, paired);
  if (name == "case-b-2")
    return make_scenario("case-b-2", ModelSelection::Both, Topology::constant(detail::case_b_matrix()),
                         MixtureState::line({0.3709, -0.1899, 0.2992, -0.4802}, {1, 2, -1, -2}, {1, 0.1, 1, 1}),
                         1e-4, 2.0, paired);
  if (name == "prop52")
    return make_scenario("prop52", ModelSelection::PBCS,
                         Topology::constant(Matrix{{0, 200, 1}, {200, 0, 1}, {1, 1, 0}}),
                         MixtureState::line({0.3, -0.1, -0.2}, {4, 3, -7}, {2, 1, 1}), 1e-4, 1.0, single);
  if (name == "prop53")
    return make_scenario("prop53", ModelSelection::PBCS, Topology::constant(Matrix{{0, 3, 1}, {3, 0, 1}, {1, 1, 0}}),
                         MixtureState::line({0.3, -0.1, -0.2}, {1, -2, 1}, {2, 1, 1}), 1e-3, 5.0, single);
  if (name == "uniform-oracle")
    return make_scenario("uniform-oracle", ModelSelection::KBCS, Topology::uniform(3),
                         MixtureState::line({0.2108, -0.3500, 0.1392}, {1, 2, -3}, {3, 0.01, 3}), 1e-3, 10.0,
                         single);
  throw InputError("unknown builtin '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// CSV output, 17 significant digits.

namespace detail {

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string component_name(const char* prefix, std::size_t a, std::size_t k, std::size_t d) {
  std::string s = prefix + std::to_string(a + 1);
  if (d > 1) s += "_" + std::to_string(k + 1);
  return s;
}

}  // namespace detail

/// Header `t,x1..,u1..,T1..`; vector components are named x1_1, x1_2, ... when d > 1.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.initial().n, d = traj.initial().d;
  os << "t";
  for (const char* p : {"x", "u"})
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t k = 0; k < d; ++k) os << ',' << detail::component_name(p, a, k, d);
  for (std::size_t a = 0; a < n; ++a) os << ",T" << a + 1;
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const MixtureState& s = traj.states[i];
    os << detail::fmt17(traj.times[i]);
    for (double v : s.x) os << ',' << detail::fmt17(v);
    for (double v : s.u) os << ',' << detail::fmt17(v);
    for (double v : s.T) os << ',' << detail::fmt17(v);
    os << '\n';
  }
}

/// Sigma is dS/dt; n * Sigma is the per-mixture production.
inline void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& rows) {
  os << "t,X,V,E,S,Sigma,mom_res,energy_res,minT\n";
  for (const auto& r : rows) {
    for (double v : {r.t, r.X, r.V, r.E, r.S, r.Sigma, r.mom_residual, r.energy_residual})
      os << detail::fmt17(v) << ',';
    os << detail::fmt17(r.min_T) << '\n';
  }
}

/// Header `t,dx1..,du1..,dE1..`: per-particle PB-CS minus KB-CS gaps.
inline void write_deviation_csv(std::ostream& os, const DeviationReport& r) {
  const std::size_t n = r.du.size();
  os << "t";
  for (const char* p : {"dx", "du", "dE"})
    for (std::size_t a = 0; a < n; ++a) os << ',' << p << a + 1;
  os << '\n';
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << detail::fmt17(r.times[i]);
    for (const auto* seq : {&r.dx, &r.du, &r.dE})
      for (std::size_t a = 0; a < n; ++a) os << ',' << detail::fmt17((*seq)[a][i]);
    os << '\n';
  }
}

}  // namespace thermoflock
