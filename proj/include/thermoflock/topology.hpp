#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "thermoflock/matrix.hpp"
#include "thermoflock/state.hpp"

namespace thermoflock {

/// Time-independent symmetric weights a_{alpha beta}. Diagonal entries are
/// kept as given but never enter the dynamics.
struct ConstantSymmetric {
  Matrix a;
};

/// Metric kernel a_{alpha beta} = (1 + |x_beta - x_alpha|^2)^(-lambda), 0 < lambda <= 1/2.
struct Metric {
  double lambda = 0.5;
};

class Topology {
 public:
  static Topology constant(Matrix a) {
    if (!a.is_square()) throw InputError("interaction matrix must be square");
    if (a.rows() < 2) throw InputError("interaction matrix must be at least 2x2");
    if (!a.is_symmetric(1e-12)) throw InputError("interaction matrix is not symmetric");
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j)
        if (i != j && !(a(i, j) >= 0.0))
          throw InputError("interaction weight a(" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ") is negative");
    return Topology(ConstantSymmetric{std::move(a)});
  }

  /// a_{alpha beta} = value for all pairs.
  static Topology uniform(std::size_t n, double value = 1.0) {
    return constant(Matrix::constant(n, value));
  }

  static Topology metric(double lambda) {
    if (!(lambda > 0.0 && lambda <= 0.5))
      throw InputError("metric exponent lambda must lie in (0, 1/2]");
    return Topology(Metric{lambda});
  }

  bool is_metric() const noexcept { return std::holds_alternative<Metric>(kind_); }
  bool is_constant() const noexcept { return !is_metric(); }

  const Matrix& matrix() const { return std::get<ConstantSymmetric>(kind_).a; }
  double lambda() const { return std::get<Metric>(kind_).lambda; }

  /// True for a constant topology whose off-diagonal entries all coincide.
  bool is_uniform() const {
    if (is_metric()) return false;
    const Matrix& a = matrix();
    const double ref = a(0, 1);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j)
        if (i != j && a(i, j) != ref) return false;
    return true;
  }

  /// Particle count implied by the topology, or 0 for a metric kernel.
  std::size_t size() const { return is_metric() ? 0 : matrix().rows(); }

  void check_compatible(const MixtureState& s) const {
    if (is_constant() && matrix().rows() != s.n)
      throw InputError("interaction matrix is " + std::to_string(matrix().rows()) + "x" +
                       std::to_string(matrix().rows()) + " but the state has " +
                       std::to_string(s.n) + " particles");
  }

  /// Weight between alpha and beta given the positions `x` (flat, dimension d).
  double weight_at(std::span<const double> x, std::size_t d, std::size_t alpha, std::size_t beta) const {
    if (is_constant()) return matrix()(alpha, beta);
    const double r2 = detail::squared_distance(x.subspan(alpha * d, d), x.subspan(beta * d, d));
    const double lam = lambda();
    // (1 + r^2)^(-1/2) is the common case; sqrt is exact where pow is not.
    return lam == 0.5 ? 1.0 / std::sqrt(1.0 + r2) : std::pow(1.0 + r2, -lam);
  }

  double weight(const MixtureState& s, std::size_t alpha, std::size_t beta) const {
    if (alpha >= s.n || beta >= s.n)
      throw std::out_of_range("particle index out of range");
    check_compatible(s);
    return weight_at(s.x, s.d, alpha, beta);
  }

  /// Minimum weight over distinct pairs: underline-a for constant weights,
  /// phi(t) for the metric kernel.
  double min_weight(const MixtureState& s) const {
    check_compatible(s);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < s.n; ++a)
      for (std::size_t b = 0; b < s.n; ++b)
        if (a != b) m = std::min(m, weight_at(s.x, s.d, a, b));
    return m;
  }

  /// Row average (1/n) sum_beta a_{alpha beta}, diagonal included.
  double row_average(const MixtureState& s, std::size_t alpha) const {
    check_compatible(s);
    double sum = 0.0;
    for (std::size_t b = 0; b < s.n; ++b) sum += weight_at(s.x, s.d, alpha, b);
    return sum / static_cast<double>(s.n);
  }

  friend bool operator==(const Topology& l, const Topology& r) {
    if (l.is_metric() != r.is_metric()) return false;
    return l.is_metric() ? l.lambda() == r.lambda() : l.matrix() == r.matrix();
  }

 private:
  explicit Topology(std::variant<ConstantSymmetric, Metric> kind) : kind_(std::move(kind)) {}
  std::variant<ConstantSymmetric, Metric> kind_;
};

// ---------------------------------------------------------------------------
// Transforms between the n x n coupling matrices (phi, zeta) and the reduced
// (n-1) x (n-1) matrices (psi, theta). The same map serves both pairs.

/// psi_ij = -phi_ij (i != j), psi_ii = sum_{beta != i} phi_{i beta}, for i, j < n.
inline Matrix phi_to_psi(const Matrix& phi) {
  if (!phi.is_square() || phi.rows() < 2) throw InputError("phi must be square with n >= 2");
  if (!phi.is_symmetric()) throw InputError("phi is not symmetric");
  const std::size_t n = phi.rows();
  Matrix psi(n - 1, n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b)
      if (b != i) row += phi(i, b);
    for (std::size_t j = 0; j + 1 < n; ++j) psi(i, j) = i == j ? row : -phi(i, j);
  }
  return psi;
}

/// Inverse of phi_to_psi. The diagonal of phi carries no information and is
/// set to `diagonal`.
inline Matrix psi_to_phi(const Matrix& psi, double diagonal = 0.0) {
  if (!psi.is_square() || psi.rows() < 1) throw InputError("psi must be square and non-empty");
  if (!psi.is_symmetric()) throw InputError("psi is not symmetric");
  const std::size_t m = psi.rows();
  Matrix phi(m + 1, m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      row += psi(i, j);
      if (i != j) phi(i, j) = -psi(i, j);
    }
    phi(i, m) = row;
    phi(m, i) = row;
  }
  for (std::size_t a = 0; a <= m; ++a) phi(a, a) = diagonal;
  return phi;
}

struct ReducedCouplings {
  Matrix psi;
  Matrix theta;
};

inline ReducedCouplings reduce_couplings(const Matrix& phi, const Matrix& zeta) {
  return {phi_to_psi(phi), phi_to_psi(zeta)};
}

}  // namespace thermoflock
