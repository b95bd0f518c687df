#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "thermoflock/integrate.hpp"
#include "thermoflock/models.hpp"
#include "thermoflock/state.hpp"
#include "thermoflock/topology.hpp"

namespace thermoflock {

/// l2 norms of positions, velocities and energy fluctuations.
struct Fluctuations {
  double X = 0.0;
  double V = 0.0;
  double E = 0.0;
};

inline Fluctuations fluctuations(const MixtureState& s, ReferenceTemperature T0) {
  check_shape(s);
  double x2 = 0.0, u2 = 0.0, e2 = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) {
    const auto xa = s.position(a);
    x2 += detail::dot(xa, xa);
    u2 += s.speed_squared(a);
    const double Ea = energy_fluctuation(s, a, T0);
    e2 += Ea * Ea;
  }
  return {std::sqrt(x2), std::sqrt(u2), std::sqrt(e2)};
}

/// S = (1/n) sum_alpha ln T_alpha.
inline double entropy(const MixtureState& s) {
  require_admissible(s);
  double sum = 0.0;
  for (double t : s.T) sum += std::log(t);
  return sum / static_cast<double>(s.n);
}

/// dS/dt from the closed-form dissipation of each model. The quantity
/// usually quoted for these models is n * dS/dt; multiply by n to get it.
inline double entropy_production(Model model, const MixtureState& s, const Topology& topo,
                                 ReferenceTemperature T0) {
  require_admissible(s);
  topo.check_compatible(s);
  const std::size_t n = s.n, d = s.d;
  const double t0 = T0.value();
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double w = topo.weight_at(s.x, d, a, b);
      const double Ta = s.T[a], Tb = s.T[b];
      double term = 0.0;
      if (model == Model::PBCS) {
        double dw2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double dw = s.u[b * d + k] / Tb - s.u[a * d + k] / Ta;
          dw2 += dw * dw;
        }
        const double dinv = 1.0 / Ta - 1.0 / Tb;
        term = t0 * (dw2 + t0 * dinv * dinv);
      } else {
        const double du2 = detail::squared_distance(s.velocity(a), s.velocity(b));
        term = ((Ta + Tb) * 0.5 * du2 + (Tb - Ta) * (Tb - Ta)) / (Ta * Tb);
      }
      sum += 2.0 * w * term;  // (a, b) and (b, a)
    }
  }
  const double nn = static_cast<double>(n);
  return sum / (2.0 * nn * nn);
}

struct ConservationResiduals {
  double momentum = 0.0;  // |sum u|
  double energy = 0.0;    // |(1/n) sum (T + |u|^2/2) - T0|
  double centroid = 0.0;  // |sum x|
};

inline ConservationResiduals conservation_residuals(const MixtureState& s, ReferenceTemperature T0) {
  const ValidationReport r = validate_initial(s, T0, 0.0);
  return {r.momentum_residual, r.energy_residual, r.centroid_residual};
}

struct DiagnosticsRecord {
  double t = 0.0;
  double X = 0.0;
  double V = 0.0;
  double E = 0.0;
  double S = 0.0;
  double Sigma = 0.0;  // dS/dt
  double mom_residual = 0.0;
  double energy_residual = 0.0;
  double min_T = 0.0;
};

inline DiagnosticsRecord diagnose(Model model, double t, const MixtureState& s, const Topology& topo,
                                  ReferenceTemperature T0) {
  const Fluctuations f = fluctuations(s, T0);
  const ConservationResiduals c = conservation_residuals(s, T0);
  return {t,
          f.X,
          f.V,
          f.E,
          entropy(s),
          entropy_production(model, s, topo, T0),
          c.momentum,
          c.energy,
          *std::min_element(s.T.begin(), s.T.end())};
}

inline std::vector<DiagnosticsRecord> diagnose(const Trajectory& traj) {
  std::vector<DiagnosticsRecord> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    out.push_back(diagnose(traj.model, traj.times[i], traj.states[i], traj.topology, traj.T0));
  return out;
}

// ---------------------------------------------------------------------------
// Decay envelopes.

/// Normalized decay profile f(t) with f(0) = prefactor. A functional F obeys
/// the envelope when F(t) <= F(0) * f(t).
struct Envelope {
  enum class Kind { TypeAExponential, TypeBSubexponential, TypeBAlgebraic };

  Kind kind = Kind::TypeAExponential;
  double prefactor = 1.0;
  double rate = 1.0;     // exponential rate; Lambda0 for the metric kernel
  double lambda = 0.0;   // metric exponent, Type B only

  static Envelope exponential(double rate, double prefactor = 1.0) {
    if (!(rate > 0.0)) throw InputError("envelope rate must be positive");
    return {Kind::TypeAExponential, prefactor, rate, 0.0};
  }

  /// Envelope for the metric kernel with exponent lambda and constant Lambda0.
  static Envelope metric(double lambda, double Lambda0) {
    if (!(Lambda0 > 0.0 && Lambda0 <= 1.0)) throw InputError("Lambda0 must lie in (0, 1]");
    if (!(lambda > 0.0 && lambda <= 0.5)) throw InputError("lambda must lie in (0, 1/2]");
    return {lambda == 0.5 ? Kind::TypeBAlgebraic : Kind::TypeBSubexponential, 1.0, Lambda0, lambda};
  }

  double operator()(double t) const {
    switch (kind) {
      case Kind::TypeAExponential:
        return prefactor * std::exp(-rate * t);
      case Kind::TypeBSubexponential: {
        const double p = 1.0 - 2.0 * lambda;
        return prefactor * std::exp(-rate / p * (std::pow(1.0 + t, p) - 1.0));
      }
      case Kind::TypeBAlgebraic:
        return prefactor * std::pow(1.0 + t, -rate);
    }
    return prefactor;
  }
};

/// Lambda0 = (max{1 + 2 X0^2, 2 V0^2})^(-lambda); never exceeds one.
inline double lambda0(double X0, double V0, double lambda) {
  return std::pow(std::max(1.0 + 2.0 * X0 * X0, 2.0 * V0 * V0), -lambda);
}

/// Flocking envelope of the kinetic model for the given topology: rate
/// underline-a for constant weights, Lambda0 from the initial data for the
/// metric kernel.
inline Envelope flocking_envelope(const Topology& topo, const MixtureState& initial, ReferenceTemperature T0) {
  if (topo.is_metric()) {
    const Fluctuations f = fluctuations(initial, T0);
    return Envelope::metric(topo.lambda(), lambda0(f.X, f.V, topo.lambda()));
  }
  return Envelope::exponential(topo.min_weight(initial));
}

enum class Functional { V, E };

struct EnvelopeReport {
  double max_ratio = 0.0;
  std::optional<double> first_violation;
  bool holds = true;
};

/// Evaluates F(t) / (F(0) f(t)) at every record.
inline EnvelopeReport envelope_check(const Trajectory& traj, const Envelope& env, Functional which,
                                     double tol = 1e-6) {
  auto value = [&](const MixtureState& s) {
    const Fluctuations f = fluctuations(s, traj.T0);
    return which == Functional::V ? f.V : f.E;
  };
  EnvelopeReport rep;
  const double F0 = value(traj.initial());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double F = value(traj.states[i]);
    const double bound = F0 * env(traj.times[i]);
    double ratio = 0.0;
    if (bound > 0.0)
      ratio = F / bound;
    else if (F > 0.0)
      ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > 1.0 + tol && !rep.first_violation) rep.first_violation = traj.times[i];
  }
  rep.holds = !rep.first_violation.has_value();
  return rep;
}

}  // namespace thermoflock
