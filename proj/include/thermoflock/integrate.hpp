#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermoflock/error.hpp"
#include "thermoflock/models.hpp"
#include "thermoflock/state.hpp"
#include "thermoflock/topology.hpp"

namespace thermoflock {

enum class Scheme { ExplicitEuler, RK4 };

inline std::string_view to_string(Scheme s) { return s == Scheme::RK4 ? "rk4" : "euler"; }

inline Scheme parse_scheme(std::string_view s) {
  if (s == "rk4") return Scheme::RK4;
  if (s == "euler") return Scheme::ExplicitEuler;
  throw InputError("unknown scheme '" + std::string(s) + "' (expected rk4 or euler)");
}

struct IntegratorConfig {
  Scheme scheme = Scheme::RK4;
  double dt = 1e-3;
  double t_end = 10.0;
  std::size_t record_every = 1;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InputError("t_end must be non-negative");
    if (t_end > 0.0 && dt > t_end) throw InputError("dt must not exceed t_end");
    if (record_every < 1) throw InputError("record_every must be at least 1");
  }

  /// Number of steps; the last one is shortened when t_end is not a multiple of dt.
  std::size_t step_count() const {
    if (t_end == 0.0) return 0;
    const double ratio = t_end / dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio))
      return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(ratio));
  }
};

/// Recorded states of one run. Times start at 0 and increase strictly.
struct Trajectory {
  Model model = Model::KBCS;
  Topology topology = Topology::uniform(2);
  ReferenceTemperature T0{1.0};
  IntegratorConfig config;
  std::vector<double> times;
  std::vector<MixtureState> states;

  std::size_t size() const noexcept { return times.size(); }
  const MixtureState& initial() const { return states.front(); }
  const MixtureState& final() const { return states.back(); }
};

namespace detail {

// Phase-space point advanced by the integrator: positions, velocities and the
// total specific energy e = T + |u|^2/2. Stepping e keeps the total energy a
// linear invariant of every Runge-Kutta stage.
struct Phase {
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<double> x, u, e;

  static Phase from(const MixtureState& s) {
    Phase p{s.n, s.d, s.x, s.u, std::vector<double>(s.n)};
    for (std::size_t a = 0; a < s.n; ++a) p.e[a] = s.total_energy(a);
    return p;
  }

  std::vector<double> temperatures() const {
    std::vector<double> T(n);
    for (std::size_t a = 0; a < n; ++a) {
      const std::span<const double> ua(u.data() + a * d, d);
      T[a] = e[a] - 0.5 * dot(ua, ua);
    }
    return T;
  }

  MixtureState to_state() const {
    MixtureState s;
    s.n = n;
    s.d = d;
    s.x = x;
    s.u = u;
    s.T = temperatures();
    return s;
  }

  // this + h * k
  Phase shifted(const Phase& k, double h) const {
    Phase out = *this;
    for (std::size_t i = 0; i < x.size(); ++i) out.x[i] += h * k.x[i];
    for (std::size_t i = 0; i < u.size(); ++i) out.u[i] += h * k.u[i];
    for (std::size_t i = 0; i < e.size(); ++i) out.e[i] += h * k.e[i];
    return out;
  }
};

inline Phase phase_derivative(Model model, const Phase& p, const Topology& topo, double T0, int stage) {
  const std::vector<double> T = p.temperatures();
  for (std::size_t a = 0; a < p.n; ++a)
    if (!(T[a] > kTemperatureFloor)) throw IntegrationError(a, stage, T[a]);
  Phase k{p.n, p.d, p.u, std::vector<double>(p.u.size()), std::vector<double>(p.n)};
  model_field(model, topo, p.n, p.d, p.x, p.u, T, T0, k.u, k.e);
  return k;
}

inline Phase advance(Model model, const Phase& p, const Topology& topo, double T0, double h, Scheme scheme) {
  if (scheme == Scheme::ExplicitEuler) return p.shifted(phase_derivative(model, p, topo, T0, 1), h);
  const Phase k1 = phase_derivative(model, p, topo, T0, 1);
  const Phase k2 = phase_derivative(model, p.shifted(k1, 0.5 * h), topo, T0, 2);
  const Phase k3 = phase_derivative(model, p.shifted(k2, 0.5 * h), topo, T0, 3);
  const Phase k4 = phase_derivative(model, p.shifted(k3, h), topo, T0, 4);
  Phase out = p;
  const double h6 = h / 6.0, h3 = h / 3.0;
  for (std::size_t i = 0; i < p.x.size(); ++i)
    out.x[i] += h6 * k1.x[i] + h3 * k2.x[i] + h3 * k3.x[i] + h6 * k4.x[i];
  for (std::size_t i = 0; i < p.u.size(); ++i)
    out.u[i] += h6 * k1.u[i] + h3 * k2.u[i] + h3 * k3.u[i] + h6 * k4.u[i];
  for (std::size_t i = 0; i < p.e.size(); ++i)
    out.e[i] += h6 * k1.e[i] + h3 * k2.e[i] + h3 * k3.e[i] + h6 * k4.e[i];
  // Positivity is monitored at every step, not only at records.
  const std::vector<double> T = out.temperatures();
  for (std::size_t a = 0; a < out.n; ++a)
    if (!(T[a] > kTemperatureFloor)) throw IntegrationError(a, 0, T[a]);
  return out;
}

}  // namespace detail

/// One step of size h (negative h steps backward). Metric weights are
/// re-evaluated at every stage from the stage positions.
inline MixtureState step(Model model, const MixtureState& s, const Topology& topo,
                         ReferenceTemperature T0, double h, Scheme scheme = Scheme::RK4) {
  require_admissible(s);
  topo.check_compatible(s);
  return detail::advance(model, detail::Phase::from(s), topo, T0.value(), h, scheme).to_state();
}

inline MixtureState step(Model model, const MixtureState& s, const Topology& topo,
                         ReferenceTemperature T0, const IntegratorConfig& config) {
  return step(model, s, topo, T0, config.dt, config.scheme);
}

/// Fixed-step integration from t = 0 to config.t_end. Records the initial
/// state, every `record_every`-th step and the final state. Identical inputs
/// give bit-identical trajectories.
inline Trajectory integrate(Model model, const MixtureState& initial, const Topology& topo,
                            ReferenceTemperature T0, const IntegratorConfig& config) {
  config.validate();
  require_admissible(initial);
  topo.check_compatible(initial);
  const ValidationReport report = validate_initial(initial, T0, 1e-9);
  if (!report.ok()) throw InputError("initial data is not well prepared: " + report.describe());

  Trajectory traj{model, topo, T0, config, {0.0}, {initial}};
  const std::size_t steps = config.step_count();
  detail::Phase phase = detail::Phase::from(initial);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * config.dt;
    const double t_next = k == steps ? config.t_end : static_cast<double>(k) * config.dt;
    const double h = k == steps ? config.t_end - t_prev : config.dt;
    try {
      phase = detail::advance(model, phase, topo, T0.value(), h, config.scheme);
    } catch (const IntegrationError& e) {
      throw e.at_time(t_prev);
    }
    if (k % config.record_every == 0 || k == steps) {
      traj.times.push_back(t_next);
      traj.states.push_back(phase.to_state());
    }
  }
  return traj;
}

namespace detail {

inline double sup_distance(const MixtureState& a, const MixtureState& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) m = std::max(m, std::abs(a.x[i] - b.x[i]));
  for (std::size_t i = 0; i < a.u.size(); ++i) m = std::max(m, std::abs(a.u[i] - b.u[i]));
  for (std::size_t i = 0; i < a.T.size(); ++i) m = std::max(m, std::abs(a.T[i] - b.T[i]));
  return m;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Empirical order of accuracy: slope of log(sup-norm error at t_end) against
/// log(dt). With no reference, the run at half the finest step serves as one.
inline double convergence_order(Model model, const MixtureState& initial, const Topology& topo,
                                ReferenceTemperature T0, Scheme scheme, double t_end,
                                const std::vector<double>& dt_sequence,
                                std::optional<MixtureState> reference = std::nullopt) {
  if (dt_sequence.size() < 3) throw InputError("convergence fit needs at least three step sizes");
  auto final_state = [&](double dt) {
    IntegratorConfig cfg{scheme, dt, t_end, static_cast<std::size_t>(-1)};
    return integrate(model, initial, topo, T0, cfg).final();
  };
  if (!reference) {
    double finest = dt_sequence.front();
    for (double dt : dt_sequence) finest = std::min(finest, dt);
    reference = final_state(finest / 2.0);
  }
  std::vector<double> log_dt, log_err;
  for (double dt : dt_sequence) {
    log_dt.push_back(std::log(dt));
    log_err.push_back(std::log(detail::sup_distance(final_state(dt), *reference)));
  }
  return detail::fit_slope(log_dt, log_err);
}

}  // namespace thermoflock
