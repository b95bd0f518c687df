#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "thermoflock/analysis.hpp"
#include "thermoflock/random.hpp"

using namespace thermoflock;
using Catch::Approx;

namespace {

MixtureState case_a() {
  return normalize_frame(MixtureState::line({0.2108, -0.3500, 0.1392}, {1, 2, -3}, {3, 0.01, 3}));
}

double V2(const MixtureState& s) {
  double v = 0.0;
  for (std::size_t a = 0; a < s.n; ++a) v += s.speed_squared(a);
  return v;
}

}  // namespace

TEST_CASE("closed form starts at the initial state and settles at the flocking state") {
  const auto s = case_a();
  const auto T0 = derive_T0(s);
  CHECK(detail::sup_distance(closed_form_kbcs_uniform(s, T0, 0.0), s) <= 1e-15);
  const auto late = closed_form_kbcs_uniform(s, T0, 60.0);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(late.x[a] == Approx(s.x[a] + s.u[a]).margin(1e-14));
    CHECK(late.T[a] == Approx(T0.value()).margin(1e-14));
  }
}

TEST_CASE("closed form solves the kinetic system") {
  // Residual between the analytical time derivative and the vector field.
  const auto s = random_admissible_state(4, 2, 12);
  const auto T0 = derive_T0(s);
  for (double t : {0.0, 0.3, 1.7, 5.0}) {
    const auto st = closed_form_kbcs_uniform(s, T0, t);
    const auto d = rhs_kbcs(st, Topology::uniform(4), T0);
    const double e = std::exp(-t);
    for (std::size_t a = 0; a < s.n; ++a) {
      for (std::size_t k = 0; k < s.d; ++k) {
        const double u0 = s.u[a * s.d + k];
        CHECK(std::abs(d.du[a * s.d + k] + u0 * e) <= 1e-12);
        CHECK(std::abs(d.dx[a * s.d + k] - u0 * e) <= 1e-12);
      }
      const double E0 = energy_fluctuation(s, a, T0);
      const double dT = -E0 * e + s.speed_squared(a) * e * e;
      CHECK(std::abs(d.dT[a] - dT) <= 1e-12);
    }
  }
  auto moving = s;
  moving.u[0] += 1.0;
  CHECK_THROWS_AS(closed_form_kbcs_uniform(moving, T0, 1.0), InputError);
}

TEST_CASE("initial velocity derivative for the prop52 data") {
  const auto s = normalize_frame(MixtureState::line({0.3, -0.1, -0.2}, {4, 3, -7}, {2, 1, 1}));
  const auto T0 = derive_T0(s);
  CHECK(T0.value() == Approx(41.0 / 3.0));
  const Topology topo = Topology::constant(Matrix{{0, 200, 1}, {200, 0, 1}, {1, 1, 0}});
  const double t0 = T0.value();
  CHECK(initial_velocity_derivative_pbcs(s, topo, T0) == Approx(2.0 * t0 / 3.0 * (200.0 - 99.0 - 100.0)).epsilon(1e-12));
  // Oracle: 2 sum u . du from the vector field.
  const auto d = rhs_pbcs(s, topo, T0);
  double two_u_du = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) two_u_du += 2.0 * s.u[i] * d.du[i];
  CHECK(initial_velocity_derivative_pbcs(s, topo, T0) == Approx(two_u_du).epsilon(1e-12));
}

TEST_CASE("initial energy derivative for the prop53 data") {
  const auto s = normalize_frame(MixtureState::line({0.3, -0.1, -0.2}, {1, -2, 1}, {2, 1, 1}));
  const auto T0 = derive_T0(s);
  CHECK(T0.value() == Approx(7.0 / 3.0));
  const Topology topo = Topology::constant(Matrix{{0, 3, 1}, {3, 0, 1}, {1, 1, 0}});
  const double t0 = T0.value();
  CHECK(initial_energy_derivative_pbcs(s, topo, T0) == Approx(2.0 * t0 * t0 / 3.0 * (0.75 - 0.5)).epsilon(1e-12));
  const auto d = rhs_pbcs(s, topo, T0);
  double two_E_dE = 0.0;
  for (std::size_t a = 0; a < 3; ++a) two_E_dE += 2.0 * energy_fluctuation(s, a, T0) * d.dE[a];
  CHECK(initial_energy_derivative_pbcs(s, topo, T0) == Approx(two_E_dE).epsilon(1e-12));

  const auto pairs = classify_energy_pairs(s, T0);
  auto in = [](const auto& v, std::size_t a, std::size_t b) {
    return std::find(v.begin(), v.end(), std::pair{a, b}) != v.end();
  };
  CHECK(in(pairs.plus, 0, 1));
  CHECK(in(pairs.minus, 0, 2));
  CHECK(in(pairs.minus, 1, 2));
  CHECK(pairs.plus.size() + pairs.minus.size() == 9);
}

TEST_CASE("energy pair classification agrees with brute force") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = random_admissible_state(2 + seed % 4, 1, seed);
    const auto T0 = derive_T0(s);
    const auto pairs = classify_energy_pairs(s, T0);
    std::size_t plus = 0;
    for (std::size_t a = 0; a < s.n; ++a)
      for (std::size_t b = 0; b < s.n; ++b) {
        const double Ea = s.T[a] + 0.5 * s.u[a] * s.u[a], Eb = s.T[b] + 0.5 * s.u[b] * s.u[b];
        if ((Ea - Eb) * (s.T[b] - s.T[a]) > 0.0) ++plus;
      }
    CHECK(pairs.plus.size() == plus);
  }
  const auto flat = MixtureState::line({0, 1, 2}, {1, 0, -1}, {2, 2, 2});
  CHECK(classify_energy_pairs(flat, derive_T0(flat)).plus.empty());
}

TEST_CASE("two-particle phenomenological velocity fluctuation never grows") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = random_admissible_state(2, 1 + seed % 3, seed, {1.0, 3.0, 0.05, 5.0});
    const Topology topo = Topology::uniform(2, 0.5 + static_cast<double>(seed % 7));
    CHECK(initial_velocity_derivative_pbcs(s, topo, derive_T0(s)) <= 1e-12);
  }
}

TEST_CASE("uniform-weight dissipation identity") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = random_admissible_state(2 + seed % 4, 2, seed);
    const auto T0 = derive_T0(s);
    const double c = 0.5 * static_cast<double>(1 + seed % 3);
    CHECK(initial_velocity_derivative_pbcs(s, Topology::uniform(s.n, c), T0) ==
          Approx(velocity_dissipation_uniform(s, T0, c)).epsilon(1e-12));
  }
}

TEST_CASE("flow derivative is accurate on the closed form") {
  const auto s = case_a();
  const auto T0 = derive_T0(s);
  // d/dt V^2 = -2 V^2 for the uniform kinetic flow.
  const double fd = flow_derivative(Model::KBCS, s, Topology::uniform(3), T0, V2);
  CHECK(fd == Approx(-2.0 * V2(s)).epsilon(1e-8));
  CHECK_THROWS_AS(flow_derivative(Model::KBCS, s, Topology::uniform(3), T0, V2, -1.0), InputError);
}

TEST_CASE("smallness epsilon") {
  const auto eq = MixtureState::line({-1, 1}, {0, 0}, {2, 2});
  CHECK(smallness_epsilon(eq, ReferenceTemperature(2.0)) == 0.0);
  const auto s = MixtureState::line({-1, 1}, {0.1, -0.1}, {1.0, 1.0});
  // max(0.2, 0, sqrt(8 * 0.01)) = sqrt(0.08)
  CHECK(smallness_epsilon(s, ReferenceTemperature(1.0)) == Approx(std::sqrt(0.08)));
}

TEST_CASE("perturbed equilibrium is admissible with the requested scaling") {
  const ReferenceTemperature T0(1.5);
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto s = perturbed_equilibrium(3, 2, T0, eps, 4);
    CHECK(validate_initial(s, T0, 1e-14).ok());
    double umax = 0.0, tmax = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      umax = std::max(umax, std::sqrt(s.speed_squared(a)));
      tmax = std::max(tmax, std::abs(s.T[a] - T0.value()));
    }
    CHECK(umax <= std::sqrt(eps));
    CHECK(tmax <= 2.0 * eps * T0.value());
  }
  CHECK(perturbed_equilibrium(3, 1, T0, 1e-2, 9) == perturbed_equilibrium(3, 1, T0, 1e-2, 9));
  CHECK_THROWS_AS(perturbed_equilibrium(3, 1, T0, 2.0, 1), InputError);
}

TEST_CASE("deviation from equilibrium data is identically zero") {
  const auto eq = MixtureState::line({-0.5, 0.5}, {0, 0}, {1, 1});
  const auto r = deviation_experiment(eq, Topology::uniform(2), ReferenceTemperature(1.0), IntegratorConfig{Scheme::RK4, 0.1, 2.0, 1});
  CHECK(r.sup_u == 0.0);
  CHECK(r.sup_E == 0.0);
  CHECK(r.small);
  CHECK(r.tilde_a == std::vector<double>{1.0, 1.0});
}

TEST_CASE("deviation report on a small perturbation") {
  const ReferenceTemperature T0(1.0);
  const Topology topo = Topology::constant(Matrix{{0, 2, 1}, {2, 0, 1}, {1, 1, 0}});
  const auto s = perturbed_equilibrium(3, 1, T0, 1e-2, 3);
  const auto r = deviation_experiment(s, topo, T0, IntegratorConfig{Scheme::RK4, 1e-2, 10.0, 5});
  CHECK(r.a_min == 1.0);
  CHECK(r.tilde_a[0] == Approx(1.0));
  CHECK(r.tilde_a[2] == Approx(2.0 / 3.0));
  CHECK(r.sup_u > 0.0);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(r.du[a].front() == 0.0);
    for (std::size_t i = 0; i < r.times.size(); ++i)
      CHECK(r.du[a][i] <= r.C_u * r.epsilon * std::exp(-0.5 * r.a_min * r.times[i]) * (1 + 1e-12) + 1e-300);
  }
  CHECK(r.C_u_fit > 0.0);
  CHECK(r.C_u_fit <= r.C_u * 1.0000001);
}

TEST_CASE("non-monotonicity detection") {
  const auto s = case_a();
  const auto T0 = derive_T0(s);
  const auto pb = integrate(Model::PBCS, s, Topology::uniform(3), T0, IntegratorConfig{Scheme::RK4, 1e-3, 3.0, 10});
  const auto kb = integrate(Model::KBCS, s, Topology::uniform(3), T0, IntegratorConfig{Scheme::RK4, 1e-3, 3.0, 10});
  const auto flagged = detect_nonmonotonicity(pb, ParticleFunctional::Speed);
  REQUIRE_FALSE(flagged.empty());
  CHECK(flagged.front().particle == 0);
  CHECK(flagged.front().t_start == 0.0);
  CHECK(detect_nonmonotonicity(kb, ParticleFunctional::Speed).empty());

  Trajectory flat = kb;
  for (auto& st : flat.states) st = flat.states.front();
  CHECK(detect_nonmonotonicity(flat, ParticleFunctional::Temperature).empty());
}
