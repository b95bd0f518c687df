#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "thermoflock/diagnostics.hpp"
#include "thermoflock/integrate.hpp"
#include "thermoflock/models.hpp"
#include "thermoflock/state.hpp"
#include "thermoflock/topology.hpp"

namespace thermoflock {

/// Exact KB-CS solution for a uniform weight a = 1: velocities and energy
/// fluctuations decay like e^{-t}.
inline MixtureState closed_form_kbcs_uniform(const MixtureState& initial, ReferenceTemperature T0, double t) {
  require_admissible(initial);
  if (detail::norm_of_sum(initial.u, initial.n, initial.d) > 1e-9)
    throw InputError("closed form requires zero total momentum");
  const double decay = std::exp(-t);
  MixtureState s = initial;
  for (std::size_t a = 0; a < s.n; ++a) {
    const double E0 = energy_fluctuation(initial, a, T0);
    for (std::size_t k = 0; k < s.d; ++k) {
      const double u0 = initial.u[a * s.d + k];
      s.u[a * s.d + k] = u0 * decay;
      s.x[a * s.d + k] = initial.x[a * s.d + k] + u0 * (1.0 - decay);
    }
    s.T[a] = T0.value() + E0 * decay - 0.5 * initial.speed_squared(a) * decay * decay;
  }
  require_positive_temperatures(s.T);
  return s;
}

/// d(V^2)/dt of the PB-CS flow written as a double sum over pairs.
inline double initial_velocity_derivative_pbcs(const MixtureState& s, const Topology& topo,
                                               ReferenceTemperature T0) {
  require_admissible(s);
  topo.check_compatible(s);
  double sum = 0.0;
  for (std::size_t a = 0; a < s.n; ++a)
    for (std::size_t b = 0; b < s.n; ++b) {
      if (a == b) continue;
      const double w = topo.weight_at(s.x, s.d, a, b);
      const double Ta = s.T[a], Tb = s.T[b];
      sum += w * (-s.speed_squared(a) / Ta + (1.0 / Ta + 1.0 / Tb) * detail::dot(s.velocity(a), s.velocity(b)) -
                  s.speed_squared(b) / Tb);
    }
  return T0.value() * sum / static_cast<double>(s.n);
}

/// d(E^2)/dt of the PB-CS flow, E^2 = sum_alpha E_alpha^2.
inline double initial_energy_derivative_pbcs(const MixtureState& s, const Topology& topo,
                                             ReferenceTemperature T0) {
  require_admissible(s);
  topo.check_compatible(s);
  const double t0 = T0.value();
  double sum = 0.0;
  for (std::size_t a = 0; a < s.n; ++a)
    for (std::size_t b = 0; b < s.n; ++b) {
      if (a == b) continue;
      const double w = topo.weight_at(s.x, s.d, a, b);
      const double Ea = energy_fluctuation(s, a, T0), Eb = energy_fluctuation(s, b, T0);
      sum += w * t0 * t0 / (s.T[a] * s.T[b]) * (Ea - Eb) * (s.T[b] - s.T[a]);
    }
  return sum / static_cast<double>(s.n);
}

/// -2 c sum_alpha (T0 / T_alpha) |u_alpha|^2: d(V^2)/dt of PB-CS when every
/// weight equals c and the momentum vanishes.
inline double velocity_dissipation_uniform(const MixtureState& s, ReferenceTemperature T0, double c = 1.0) {
  require_admissible(s);
  double sum = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) sum += s.speed_squared(a) / s.T[a];
  return -2.0 * c * T0.value() * sum;
}

struct EnergyPairs {
  std::vector<std::pair<std::size_t, std::size_t>> plus;   // (E_a - E_b)(T_b - T_a) > 0
  std::vector<std::pair<std::size_t, std::size_t>> minus;  // everything else
};

/// Splits all ordered pairs (0-based, diagonal included) by the sign of
/// (E_alpha - E_beta)(T_beta - T_alpha).
inline EnergyPairs classify_energy_pairs(const MixtureState& s, ReferenceTemperature T0) {
  check_shape(s);
  EnergyPairs out;
  for (std::size_t a = 0; a < s.n; ++a)
    for (std::size_t b = 0; b < s.n; ++b) {
      const double prod = (energy_fluctuation(s, a, T0) - energy_fluctuation(s, b, T0)) * (s.T[b] - s.T[a]);
      (prod > 0.0 ? out.plus : out.minus).emplace_back(a, b);
    }
  return out;
}

namespace detail {

// Bound on the linearized rate of the flow from the row sums of the weights
// (Gershgorin), scaled by the temperature factors of each model, and the
// relative rate of change of each temperature.
inline double local_rate(Model model, const MixtureState& s, const Topology& topo, ReferenceTemperature T0) {
  const double t0 = T0.value();
  const StateDerivative ds = rhs(model, s, topo, T0);
  double rate = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) rate = std::max(rate, std::abs(ds.dT[a]) / s.T[a]);
  for (std::size_t a = 0; a < s.n; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < s.n; ++b) {
      if (a == b) continue;
      double f = 1.0;
      if (model == Model::PBCS) {
        const double r = t0 / std::min(s.T[a], s.T[b]);
        f = std::max(r, r * r);
      }
      row += topo.weight_at(s.x, s.d, a, b) * f;
    }
    rate = std::max(rate, 2.0 * row / static_cast<double>(s.n));
  }
  return rate;
}

// S(b) - S(a) without cancelling against S itself.
inline double entropy_increment(const MixtureState& from, const MixtureState& to) {
  double sum = 0.0;
  for (std::size_t a = 0; a < from.n; ++a) sum += std::log1p((to.T[a] - from.T[a]) / from.T[a]);
  return sum / static_cast<double>(from.n);
}

}  // namespace detail

/// Time derivative of f along the flow at s, by a five-point central stencil
/// built from single RK4 steps of size +-h and +-2h. h = 0 picks a step
/// scaled to the local rate of the flow.
inline double flow_derivative(Model model, const MixtureState& s, const Topology& topo, ReferenceTemperature T0,
                              const std::function<double(const MixtureState&)>& f, double h = 0.0) {
  if (h < 0.0) throw InputError("finite-difference step must be positive");
  if (h == 0.0) h = std::min(1e-2, 4e-3 / std::max(detail::local_rate(model, s, topo, T0), 1e-300));
  auto at = [&](double dt) { return f(step(model, s, topo, T0, dt, Scheme::RK4)); };
  return (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
}

/// dS/dt by the five-point stencil with a step scaled to the local rate.
inline double entropy_rate_fd(Model model, const MixtureState& s, const Topology& topo, ReferenceTemperature T0) {
  const double h = std::min(1e-2, 4e-3 / std::max(detail::local_rate(model, s, topo, T0), 1e-300));
  auto inc = [&](double dt) { return detail::entropy_increment(s, step(model, s, topo, T0, dt, Scheme::RK4)); };
  return (-inc(2.0 * h) + 8.0 * inc(h) - 8.0 * inc(-h) + inc(-2.0 * h)) / (12.0 * h);
}

struct EntropyCheck {
  double worst_drop = 0.0;       // largest decrease of S between consecutive records
  double min_sigma = 0.0;
  double max_fd_rel_error = 0.0;
  std::size_t fd_points = 0;     // records with Sigma >= sigma_floor
  bool monotone = true;
  bool ok(double rel_tol = 1e-6) const { return monotone && min_sigma >= 0.0 && max_fd_rel_error <= rel_tol; }
};

/// S non-decreasing between records (up to `drop_tol`), Sigma >= 0, and the
/// closed-form Sigma against finite differences where Sigma >= sigma_floor.
inline EntropyCheck entropy_check(const Trajectory& traj, double sigma_floor = 1e-6, double drop_tol = 1e-14) {
  EntropyCheck c;
  c.min_sigma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const MixtureState& s = traj.states[i];
    const double sigma = entropy_production(traj.model, s, traj.topology, traj.T0);
    c.min_sigma = std::min(c.min_sigma, sigma);
    if (i + 1 < traj.size()) {
      const double inc = detail::entropy_increment(s, traj.states[i + 1]);
      c.worst_drop = std::max(c.worst_drop, -inc);
      if (inc < -drop_tol) c.monotone = false;
    }
    if (sigma >= sigma_floor) {
      const double fd = entropy_rate_fd(traj.model, s, traj.topology, traj.T0);
      c.max_fd_rel_error = std::max(c.max_fd_rel_error, std::abs(fd - sigma) / sigma);
      ++c.fd_points;
    }
  }
  return c;
}

/// Smallest eps for which the data meet the smallness conditions
/// |u_a| <= eps/2, |T_a - T0| <= eps T0 / 2, sum(|u_a|^2/2 + |T_a - T0|^2) <= eps^2/8.
inline double smallness_epsilon(const MixtureState& s, ReferenceTemperature T0) {
  check_shape(s);
  const double t0 = T0.value();
  double eps = 0.0, l2 = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) {
    const double u2 = s.speed_squared(a);
    const double dT = s.T[a] - t0;
    eps = std::max({eps, 2.0 * std::sqrt(u2), 2.0 * std::abs(dT) / t0});
    l2 += 0.5 * u2 + dT * dT;
  }
  return std::max(eps, std::sqrt(8.0 * l2));
}

/// Admissible perturbation of the equilibrium (x, 0, T0) with temperature
/// offsets of order eps and velocities of order sqrt(eps). Momentum and
/// centroid vanish and the mean total energy is exactly T0 up to rounding.
inline MixtureState perturbed_equilibrium(std::size_t n, std::size_t d, ReferenceTemperature T0, double eps,
                                          std::uint64_t seed) {
  if (n < 2 || d < 1) throw InputError("perturbation needs n >= 2 and d >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MixtureState s(n, d);
  std::vector<double> tau(n);
  for (auto& v : s.x) v = unit(rng);
  for (auto& v : s.u) v = 0.5 * unit(rng);
  for (auto& v : tau) v = 0.5 * unit(rng);
  detail::subtract_mean(s.x, n, d);
  detail::subtract_mean(s.u, n, d);
  detail::subtract_mean(tau, n, 1);
  const double root = std::sqrt(eps);
  for (auto& v : s.u) v *= root;
  for (std::size_t a = 0; a < n; ++a) s.T[a] = T0.value() * (1.0 + eps * tau[a]) - 0.5 * s.speed_squared(a);
  require_admissible(s);
  return s;
}

/// Side-by-side run of both models from shared data. Per-particle deviations
/// use the max norm over components; sequences are indexed [particle][record].
struct DeviationReport {
  std::vector<double> times;
  std::vector<std::vector<double>> dx, du, dE;
  std::vector<double> tilde_a;
  double a_min = 0.0;
  double epsilon = 0.0;
  bool small = false;  // admissible and eps <= 1
  // Minimal constants making |dev|(t) <= e^{-tilde_a t}|dev(0)| + C eps e^{-a t/2} hold at every record.
  double C_u = 0.0;
  double C_E = 0.0;
  // Least-squares constants from log residuals over [0, t_end/2].
  double C_u_fit = 0.0;
  double C_E_fit = 0.0;
  double sup_u = 0.0;           // max over particles and records of |dev u|
  double sup_E = 0.0;
  double sup_u_weighted = 0.0;  // max of |dev u| e^{a t/2}
  double terminal_u = 0.0;      // max over particles at the last record
  double terminal_E = 0.0;
};

namespace detail {

inline double max_component_gap(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

struct EnvelopeConstants {
  double minimal = 0.0;
  double fitted = 0.0;
};

inline EnvelopeConstants envelope_constants(const std::vector<double>& times,
                                            const std::vector<std::vector<double>>& dev,
                                            const std::vector<double>& tilde_a, double a_min, double eps) {
  EnvelopeConstants c;
  const double t_half = times.back() / 2.0;
  double log_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < dev.size(); ++a) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double t = times[i];
      const double residual = dev[a][i] - std::exp(-tilde_a[a] * t) * dev[a][0];
      const double scale = eps * std::exp(-0.5 * a_min * t);
      c.minimal = std::max(c.minimal, residual / scale);
      if (t <= t_half && residual > 0.0) {
        log_sum += std::log(residual / scale);
        ++count;
      }
    }
  }
  c.fitted = count > 0 ? std::exp(log_sum / static_cast<double>(count)) : 0.0;
  return c;
}

}  // namespace detail

inline DeviationReport deviation_experiment(const MixtureState& initial, const Topology& topo,
                                            ReferenceTemperature T0, const IntegratorConfig& config) {
  if (topo.is_metric()) throw InputError("deviation experiment requires constant weights");
  const Trajectory P = integrate(Model::PBCS, initial, topo, T0, config);
  const Trajectory K = integrate(Model::KBCS, initial, topo, T0, config);
  const std::size_t n = initial.n;

  DeviationReport r;
  r.times = P.times;
  r.a_min = topo.min_weight(initial);
  for (std::size_t a = 0; a < n; ++a) r.tilde_a.push_back(topo.row_average(initial, a));
  r.epsilon = smallness_epsilon(initial, T0);
  r.small = validate_initial(initial, T0, 1e-9).ok() && r.epsilon <= 1.0;
  r.dx.assign(n, std::vector<double>(r.times.size()));
  r.du = r.dx;
  r.dE = r.dx;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const MixtureState& p = P.states[i];
    const MixtureState& k = K.states[i];
    for (std::size_t a = 0; a < n; ++a) {
      r.dx[a][i] = detail::max_component_gap(p.position(a), k.position(a));
      r.du[a][i] = detail::max_component_gap(p.velocity(a), k.velocity(a));
      r.dE[a][i] = std::abs(energy_fluctuation(p, a, T0) - energy_fluctuation(k, a, T0));
      r.sup_u = std::max(r.sup_u, r.du[a][i]);
      r.sup_E = std::max(r.sup_E, r.dE[a][i]);
      r.sup_u_weighted = std::max(r.sup_u_weighted, r.du[a][i] * std::exp(0.5 * r.a_min * r.times[i]));
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    r.terminal_u = std::max(r.terminal_u, r.du[a].back());
    r.terminal_E = std::max(r.terminal_E, r.dE[a].back());
  }
  if (r.epsilon > 0.0 && r.times.size() > 1) {
    const auto cu = detail::envelope_constants(r.times, r.du, r.tilde_a, r.a_min, r.epsilon);
    const auto ce = detail::envelope_constants(r.times, r.dE, r.tilde_a, r.a_min, r.epsilon);
    r.C_u = cu.minimal;
    r.C_u_fit = cu.fitted;
    r.C_E = ce.minimal;
    r.C_E_fit = ce.fitted;
  }
  return r;
}

enum class ParticleFunctional { Speed, Energy, Temperature };

struct NonmonotoneEvent {
  std::size_t particle = 0;  // 0-based
  double t_start = 0.0;      // first interval on which the functional increases
  double t_end = 0.0;
};

/// Particles whose functional rises on some interval and falls on a later
/// one. Changes within rel_tol of the functional's scale count as flat.
inline std::vector<NonmonotoneEvent> detect_nonmonotonicity(const Trajectory& traj, ParticleFunctional which,
                                                            double rel_tol = 1e-12) {
  std::vector<NonmonotoneEvent> out;
  if (traj.size() < 3) return out;
  auto value = [&](const MixtureState& s, std::size_t a) {
    switch (which) {
      case ParticleFunctional::Speed:
        return std::sqrt(s.speed_squared(a));
      case ParticleFunctional::Energy:
        return energy_fluctuation(s, a, traj.T0);
      case ParticleFunctional::Temperature:
        return s.T[a];
    }
    return 0.0;
  };
  const std::size_t n = traj.initial().n;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<double> f(traj.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      f[i] = value(traj.states[i], a);
      scale = std::max(scale, std::abs(f[i]));
    }
    const double tol = rel_tol * scale;
    std::optional<std::size_t> first_rise;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
      const double delta = f[i + 1] - f[i];
      if (!first_rise && delta > tol) first_rise = i;
      if (first_rise && delta < -tol) {
        out.push_back({a, traj.times[*first_rise], traj.times[*first_rise + 1]});
        break;
      }
    }
  }
  return out;
}

}  // namespace thermoflock
