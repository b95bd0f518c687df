#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "thermoflock/error.hpp"
#include "thermoflock/matrix.hpp"

namespace thermoflock {

/// Temperatures at or below this value are treated as a degenerate state.
inline constexpr double kTemperatureFloor = 1e-12;

/// Positions, diffusion velocities and temperatures of n particles in R^d.
///
/// Masses and densities are normalized to one and k_B to 2/3, so the
/// internal energy of particle alpha is T_alpha and its total specific
/// energy is T_alpha + |u_alpha|^2 / 2. Vectors are stored flat,
/// particle-major: component k of particle alpha is at alpha * d + k.
struct MixtureState {
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> T;

  MixtureState() = default;
  MixtureState(std::size_t particles, std::size_t dim)
      : n(particles), d(dim), x(particles * dim, 0.0), u(particles * dim, 0.0), T(particles, 1.0) {}

  /// One-dimensional state from scalar lists.
  static MixtureState line(std::vector<double> xs, std::vector<double> us, std::vector<double> Ts) {
    MixtureState s;
    s.n = Ts.size();
    s.d = 1;
    s.x = std::move(xs);
    s.u = std::move(us);
    s.T = std::move(Ts);
    return s;
  }

  static MixtureState from_rows(const std::vector<std::vector<double>>& xs,
                                const std::vector<std::vector<double>>& us,
                                std::vector<double> Ts) {
    MixtureState s;
    s.n = Ts.size();
    s.d = xs.empty() ? 1 : xs.front().size();
    if (xs.size() != s.n || us.size() != s.n)
      throw InputError("x, u and T must list the same number of particles");
    for (std::size_t a = 0; a < s.n; ++a) {
      if (xs[a].size() != s.d || us[a].size() != s.d)
        throw InputError("particle " + std::to_string(a + 1) + " has inconsistent dimension");
      s.x.insert(s.x.end(), xs[a].begin(), xs[a].end());
      s.u.insert(s.u.end(), us[a].begin(), us[a].end());
    }
    s.T = std::move(Ts);
    return s;
  }

  std::span<const double> position(std::size_t alpha) const { return {x.data() + alpha * d, d}; }
  std::span<const double> velocity(std::size_t alpha) const { return {u.data() + alpha * d, d}; }
  std::span<double> position(std::size_t alpha) { return {x.data() + alpha * d, d}; }
  std::span<double> velocity(std::size_t alpha) { return {u.data() + alpha * d, d}; }

  double speed_squared(std::size_t alpha) const {
    const auto v = velocity(alpha);
    return detail::dot(v, v);
  }

  /// T_alpha + |u_alpha|^2 / 2.
  double total_energy(std::size_t alpha) const { return T[alpha] + 0.5 * speed_squared(alpha); }

  friend bool operator==(const MixtureState&, const MixtureState&) = default;
};

/// Strong type for the flocking temperature T0 = T_infinity.
class ReferenceTemperature {
 public:
  explicit ReferenceTemperature(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw InputError("reference temperature must be positive and finite");
  }
  double value() const noexcept { return value_; }
  friend bool operator==(ReferenceTemperature, ReferenceTemperature) = default;

 private:
  double value_;
};

/// Shape invariants: n >= 2, d >= 1, matching vector lengths.
inline void check_shape(const MixtureState& s) {
  if (s.n < 2) throw InputError("a mixture needs at least two particles");
  if (s.d < 1) throw InputError("spatial dimension must be at least one");
  if (s.x.size() != s.n * s.d || s.u.size() != s.n * s.d || s.T.size() != s.n)
    throw InputError("state arrays do not match n = " + std::to_string(s.n) +
                     ", d = " + std::to_string(s.d));
}

inline void require_positive_temperatures(std::span<const double> T) {
  for (std::size_t a = 0; a < T.size(); ++a)
    if (!(T[a] > kTemperatureFloor)) throw DegenerateStateError(a, T[a]);
}

/// Shape check plus the temperature floor.
inline void require_admissible(const MixtureState& s) {
  check_shape(s);
  require_positive_temperatures(s.T);
}

/// E_alpha = T_alpha + |u_alpha|^2/2 - T0. Never stored; always recomputed.
inline double energy_fluctuation(const MixtureState& s, std::size_t alpha, ReferenceTemperature T0) {
  return s.total_energy(alpha) - T0.value();
}

/// T0 = (1/n) sum_alpha (T_alpha + |u_alpha|^2 / 2).
inline ReferenceTemperature derive_T0(const MixtureState& s) {
  require_admissible(s);
  double sum = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) sum += s.total_energy(a);
  return ReferenceTemperature(sum / static_cast<double>(s.n));
}

namespace detail {

inline void subtract_mean(std::vector<double>& flat, std::size_t n, std::size_t d) {
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t a = 0; a < n; ++a) mean += flat[a * d + k];
    mean /= static_cast<double>(n);
    for (std::size_t a = 0; a < n; ++a) flat[a * d + k] -= mean;
  }
}

inline double norm_of_sum(const std::vector<double>& flat, std::size_t n, std::size_t d) {
  double sq = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) sum += flat[a * d + k];
    sq += sum * sum;
  }
  return std::sqrt(sq);
}

}  // namespace detail

/// Moves the state to the rest frame with its centroid at the origin.
inline MixtureState normalize_frame(MixtureState s) {
  check_shape(s);
  detail::subtract_mean(s.x, s.n, s.d);
  detail::subtract_mean(s.u, s.n, s.d);
  return s;
}

struct ValidationReport {
  double centroid_residual = 0.0;  // |sum x|
  double momentum_residual = 0.0;  // |sum u|
  double energy_residual = 0.0;    // |(1/n) sum (T + |u|^2/2) - T0|
  std::vector<std::size_t> nonpositive;  // particles with T <= floor
  double tol = 0.0;

  bool centroid_ok() const { return centroid_residual <= tol; }
  bool momentum_ok() const { return momentum_residual <= tol; }
  bool energy_ok() const { return energy_residual <= tol; }
  bool positivity_ok() const { return nonpositive.empty(); }
  bool ok() const { return centroid_ok() && momentum_ok() && energy_ok() && positivity_ok(); }

  std::string describe() const {
    std::ostringstream os;
    os.precision(6);
    if (!centroid_ok()) os << "centroid |sum x| = " << centroid_residual << " > " << tol << "; ";
    if (!momentum_ok()) os << "momentum |sum u| = " << momentum_residual << " > " << tol << "; ";
    if (!energy_ok()) os << "mean energy differs from T0 by " << energy_residual << "; ";
    for (auto a : nonpositive) os << "T_" << a + 1 << " is not positive; ";
    std::string out = os.str();
    return out.empty() ? "ok" : out.substr(0, out.size() - 2);
  }
};

/// Checks the well-prepared initial data constraints. Never throws on
/// content; only a shape mismatch is an error.
inline ValidationReport validate_initial(const MixtureState& s, ReferenceTemperature T0, double tol) {
  check_shape(s);
  ValidationReport r;
  r.tol = tol;
  r.centroid_residual = detail::norm_of_sum(s.x, s.n, s.d);
  r.momentum_residual = detail::norm_of_sum(s.u, s.n, s.d);
  double mean_energy = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) mean_energy += s.total_energy(a);
  mean_energy /= static_cast<double>(s.n);
  r.energy_residual = std::abs(mean_energy - T0.value());
  for (std::size_t a = 0; a < s.n; ++a)
    if (!(s.T[a] > kTemperatureFloor)) r.nonpositive.push_back(a);
  return r;
}

}  // namespace thermoflock
