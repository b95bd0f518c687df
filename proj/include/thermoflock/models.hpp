#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermoflock/matrix.hpp"
#include "thermoflock/state.hpp"
#include "thermoflock/topology.hpp"

namespace thermoflock {

/// PBCS: phenomenological-theory model, alignment weighted by inverse
/// temperatures. KBCS: kinetic-theory model, plain velocity/energy averaging.
enum class Model { PBCS, KBCS };

inline std::string_view to_string(Model m) { return m == Model::PBCS ? "pbcs" : "kbcs"; }

inline Model parse_model(std::string_view s) {
  if (s == "pbcs") return Model::PBCS;
  if (s == "kbcs") return Model::KBCS;
  throw InputError("unknown model '" + std::string(s) + "' (expected pbcs or kbcs)");
}

struct StateDerivative {
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<double> dx;
  std::vector<double> du;
  std::vector<double> dT;
  std::vector<double> dE;  // d/dt (T + |u|^2/2)
};

namespace detail {

// The self-term beta == alpha vanishes in every sum below and is skipped,
// so diagonal weights never matter.

inline void pbcs_field(const Topology& topo, std::size_t n, std::size_t d,
                       std::span<const double> x, std::span<const double> u,
                       std::span<const double> T, double T0,
                       std::span<double> du, std::span<double> dE) {
  std::fill(du.begin(), du.end(), 0.0);
  std::fill(dE.begin(), dE.end(), 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double w = topo.weight_at(x, d, a, b);
      for (std::size_t k = 0; k < d; ++k) {
        const double flux = w * (u[b * d + k] / T[b] - u[a * d + k] / T[a]);
        du[a * d + k] += flux;
        du[b * d + k] -= flux;
      }
      const double heat = w * (1.0 / T[a] - 1.0 / T[b]);
      dE[a] += heat;
      dE[b] -= heat;
    }
  }
  const double nn = static_cast<double>(n);
  for (auto& v : du) v *= T0 / nn;
  for (auto& v : dE) v *= T0 * T0 / nn;
}

inline void kbcs_field(const Topology& topo, std::size_t n, std::size_t d,
                       std::span<const double> x, std::span<const double> u,
                       std::span<const double> T, std::span<double> du, std::span<double> dE) {
  std::fill(du.begin(), du.end(), 0.0);
  std::fill(dE.begin(), dE.end(), 0.0);
  std::vector<double> energy(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto ua = u.subspan(a * d, d);
    energy[a] = T[a] + 0.5 * dot(ua, ua);
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double w = topo.weight_at(x, d, a, b);
      for (std::size_t k = 0; k < d; ++k) {
        const double flux = w * (u[b * d + k] - u[a * d + k]);
        du[a * d + k] += flux;
        du[b * d + k] -= flux;
      }
      const double heat = w * (energy[b] - energy[a]);
      dE[a] += heat;
      dE[b] -= heat;
    }
  }
  const double nn = static_cast<double>(n);
  for (auto& v : du) v /= nn;
  for (auto& v : dE) v /= nn;
}

inline void model_field(Model model, const Topology& topo, std::size_t n, std::size_t d,
                        std::span<const double> x, std::span<const double> u,
                        std::span<const double> T, double T0, std::span<double> du,
                        std::span<double> dE) {
  if (model == Model::PBCS)
    pbcs_field(topo, n, d, x, u, T, T0, du, dE);
  else
    kbcs_field(topo, n, d, x, u, T, du, dE);
}

inline StateDerivative assemble(const MixtureState& s, std::vector<double> du, std::vector<double> dE) {
  StateDerivative out;
  out.n = s.n;
  out.d = s.d;
  out.dx = s.u;
  out.dT.resize(s.n);
  for (std::size_t a = 0; a < s.n; ++a)
    out.dT[a] = dE[a] - dot(s.velocity(a), std::span<const double>(du).subspan(a * s.d, s.d));
  out.du = std::move(du);
  out.dE = std::move(dE);
  return out;
}

}  // namespace detail

/// Right-hand side of the normalized phenomenological model.
inline StateDerivative rhs_pbcs(const MixtureState& s, const Topology& topo, ReferenceTemperature T0) {
  require_admissible(s);
  topo.check_compatible(s);
  std::vector<double> du(s.n * s.d), dE(s.n);
  detail::pbcs_field(topo, s.n, s.d, s.x, s.u, s.T, T0.value(), du, dE);
  return detail::assemble(s, std::move(du), std::move(dE));
}

/// Right-hand side of the normalized kinetic model. T0 does not enter.
inline StateDerivative rhs_kbcs(const MixtureState& s, const Topology& topo, ReferenceTemperature /*T0*/) {
  require_admissible(s);
  topo.check_compatible(s);
  std::vector<double> du(s.n * s.d), dE(s.n);
  detail::kbcs_field(topo, s.n, s.d, s.x, s.u, s.T, du, dE);
  return detail::assemble(s, std::move(du), std::move(dE));
}

inline StateDerivative rhs(Model model, const MixtureState& s, const Topology& topo, ReferenceTemperature T0) {
  return model == Model::PBCS ? rhs_pbcs(s, topo, T0) : rhs_kbcs(s, topo, T0);
}

// ---------------------------------------------------------------------------
// General mixture production terms.

/// Constants of a general (non-normalized) inert mixture.
struct MixtureParams {
  std::vector<double> m;    // molecular masses
  std::vector<double> rho;  // partial densities
  double kB = 2.0 / 3.0;
  Matrix phi;   // phenomenological momentum couplings
  Matrix zeta;  // phenomenological energy couplings
  Matrix chi;   // kinetic interaction coefficients
  ReferenceTemperature T0{1.0};

  std::size_t size() const noexcept { return m.size(); }

  void validate() const {
    const std::size_t n = size();
    if (n < 2) throw InputError("mixture needs at least two constituents");
    if (rho.size() != n) throw InputError("rho and m differ in length");
    if (!(kB > 0.0)) throw InputError("k_B must be positive");
    for (std::size_t a = 0; a < n; ++a)
      if (!(m[a] > 0.0) || !(rho[a] > 0.0)) throw InputError("masses and densities must be positive");
    for (const Matrix* M : {&phi, &zeta, &chi})
      if (M->rows() != n || !M->is_square() || !M->is_symmetric(1e-12))
        throw InputError("coupling matrices must be symmetric n x n");
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b && !(chi(a, b) > 0.0)) throw InputError("chi must be positive off the diagonal");
  }

  /// b_{alpha beta} = 2 rho_alpha rho_beta chi_{alpha beta} / (m_alpha + m_beta)^2.
  double b(std::size_t a, std::size_t c) const {
    const double ms = m[a] + m[c];
    return 2.0 * rho[a] * rho[c] * chi(a, c) / (ms * ms);
  }

  /// phi and zeta chosen from chi so the two production families agree to
  /// first order around (u = 0, T = T0).
  static MixtureParams matched(std::vector<double> m, std::vector<double> rho, double kB,
                               Matrix chi, ReferenceTemperature T0) {
    MixtureParams p;
    p.m = std::move(m);
    p.rho = std::move(rho);
    p.kB = kB;
    p.chi = std::move(chi);
    p.T0 = T0;
    const std::size_t n = p.m.size();
    const double nn = static_cast<double>(n);
    const double t0 = T0.value();
    p.phi = Matrix(n, n);
    p.zeta = Matrix(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t c = 0; c < n; ++c) {
        const double ms = p.m[a] + p.m[c];
        const double rr = p.rho[a] * p.rho[c] * p.chi(a, c);
        p.phi(a, c) = 2.0 * nn * t0 * rr / ms;
        p.zeta(a, c) = 6.0 * nn * kB * t0 * t0 * rr / (ms * ms);
      }
    p.validate();
    return p;
  }

  /// Unit masses and densities, k_B = 2/3, chi = a / n: the constants under
  /// which the production terms reduce to the normalized particle models.
  static MixtureParams normalized(const Matrix& a, ReferenceTemperature T0) {
    const std::size_t n = a.rows();
    Matrix chi(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) chi(i, j) = a(i, j) / static_cast<double>(n);
    return matched(std::vector<double>(n, 1.0), std::vector<double>(n, 1.0), 2.0 / 3.0,
                   std::move(chi), T0);
  }
};

/// Momentum and energy interchange rates plus the entropy production they imply.
struct Production {
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<double> M_hat;  // n * d
  std::vector<double> e_hat;  // n
  double Sigma = 0.0;
};

namespace detail {

inline void check_production_inputs(const MixtureParams& p, std::span<const double> u, std::size_t d,
                                    std::span<const double> T) {
  p.validate();
  if (d < 1 || u.size() != p.size() * d || T.size() != p.size())
    throw InputError("velocity/temperature arrays do not match the mixture size");
  require_positive_temperatures(T);
}

}  // namespace detail

/// Quadratic-form production terms built from (phi, zeta). With zeta matched
/// to phi these are the phenomenological terms expressed through phi alone.
inline Production production_phenomenological(const MixtureParams& p, std::span<const double> u,
                                              std::size_t d, std::span<const double> T) {
  detail::check_production_inputs(p, u, d, T);
  const std::size_t n = p.size();
  const double nn = static_cast<double>(n);
  Production out{n, d, std::vector<double>(n * d, 0.0), std::vector<double>(n, 0.0), 0.0};
  double sigma = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      double dw2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double dw = u[b * d + k] / T[b] - u[a * d + k] / T[a];
        out.M_hat[a * d + k] += p.phi(a, b) * dw;
        dw2 += dw * dw;
      }
      const double dinv = 1.0 / T[a] - 1.0 / T[b];
      out.e_hat[a] += p.zeta(a, b) * dinv;
      sigma += p.phi(a, b) * dw2 + p.zeta(a, b) * dinv * dinv;
    }
  }
  for (auto& v : out.M_hat) v /= nn;
  for (auto& v : out.e_hat) v /= nn;
  out.Sigma = sigma / (2.0 * nn);
  return out;
}

/// Kinetic-theory production terms in the rest frame (diffusion velocities u).
inline Production production_kinetic(const MixtureParams& p, std::span<const double> u,
                                     std::size_t d, std::span<const double> T) {
  detail::check_production_inputs(p, u, d, T);
  const std::size_t n = p.size();
  Production out{n, d, std::vector<double>(n * d, 0.0), std::vector<double>(n, 0.0), 0.0};
  double sigma = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      if (a == c) continue;
      const double bac = p.b(a, c);
      const double ms = p.m[a] + p.m[c];
      double work = 0.0;
      double du2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double du = u[c * d + k] - u[a * d + k];
        out.M_hat[a * d + k] += bac * ms * du;
        work += (p.m[a] * u[a * d + k] + p.m[c] * u[c * d + k]) * du;
        du2 += du * du;
      }
      const double dT = T[c] - T[a];
      out.e_hat[a] += bac * (3.0 * p.kB * dT + work);
      sigma += bac / (2.0 * T[a] * T[c]) *
               ((p.m[a] * T[a] + p.m[c] * T[c]) * du2 + 3.0 * p.kB * dT * dT);
    }
  }
  out.Sigma = sigma;
  return out;
}

/// Kinetic production terms in the laboratory frame: lab velocities `v`,
/// energy production including the work done by the momentum exchange.
inline Production production_kinetic_lab(const MixtureParams& p, std::span<const double> v,
                                         std::size_t d, std::span<const double> T) {
  detail::check_production_inputs(p, v, d, T);
  const std::size_t n = p.size();
  Production out{n, d, std::vector<double>(n * d, 0.0), std::vector<double>(n, 0.0), 0.0};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = 0; c < n; ++c) {
      if (a == c) continue;
      const double bac = p.b(a, c);
      double work = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double dv = v[c * d + k] - v[a * d + k];
        out.M_hat[a * d + k] += bac * (p.m[a] + p.m[c]) * dv;
        work += (p.m[a] * v[a * d + k] + p.m[c] * v[c * d + k]) * dv;
      }
      out.e_hat[a] += bac * (3.0 * p.kB * (T[c] - T[a]) + work);
    }
  return out;
}

/// Fixed direction used to probe the first-order agreement of the two
/// production families: u = eps * u_dir, T = T0 (1 + eps * T_dir).
struct Perturbation {
  std::size_t d = 1;
  std::vector<double> u_dir;
  std::vector<double> T_dir;

  static Perturbation deterministic(std::size_t n, std::size_t d) {
    Perturbation p;
    p.d = d;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t k = 0; k < d; ++k)
        p.u_dir.push_back(std::sin(1.3 * static_cast<double>(a) + 0.7 * static_cast<double>(k) + 0.4));
      p.T_dir.push_back(std::cos(0.9 * static_cast<double>(a) + 0.2));
    }
    return p;
  }
};

/// Largest component-wise gap between the phenomenological and kinetic
/// production terms (momentum and energy) at a perturbation of size eps.
inline double linearization_match(const MixtureParams& p, double eps, const Perturbation& dir) {
  const std::size_t n = p.size();
  const std::size_t d = dir.d;
  if (dir.u_dir.size() != n * d || dir.T_dir.size() != n)
    throw InputError("perturbation does not match the mixture size");
  std::vector<double> u(n * d), T(n);
  for (std::size_t i = 0; i < n * d; ++i) u[i] = eps * dir.u_dir[i];
  for (std::size_t a = 0; a < n; ++a) T[a] = p.T0.value() * (1.0 + eps * dir.T_dir[a]);
  const Production ph = production_phenomenological(p, u, d, T);
  const Production ki = production_kinetic(p, u, d, T);
  double gap = 0.0;
  for (std::size_t i = 0; i < n * d; ++i) gap = std::max(gap, std::abs(ph.M_hat[i] - ki.M_hat[i]));
  for (std::size_t a = 0; a < n; ++a) gap = std::max(gap, std::abs(ph.e_hat[a] - ki.e_hat[a]));
  return gap;
}

inline double linearization_match(const MixtureParams& p, double eps) {
  return linearization_match(p, eps, Perturbation::deterministic(p.size(), 1));
}

}  // namespace thermoflock
