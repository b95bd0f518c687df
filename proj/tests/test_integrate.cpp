#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thermoflock/analysis.hpp"
#include "thermoflock/integrate.hpp"
#include "thermoflock/random.hpp"

using namespace thermoflock;
using Catch::Approx;

namespace {

MixtureState case_a() {
  return normalize_frame(MixtureState::line({0.2108, -0.3500, 0.1392}, {1, 2, -3}, {3, 0.01, 3}));
}

}  // namespace

TEST_CASE("scheme names round trip") {
  CHECK(parse_scheme("rk4") == Scheme::RK4);
  CHECK(to_string(Scheme::ExplicitEuler) == "euler");
  CHECK_THROWS_AS(parse_scheme("rk45"), InputError);
}

TEST_CASE("integrator configuration") {
  CHECK(IntegratorConfig{Scheme::RK4, 1e-3, 10.0, 1}.step_count() == 10000);
  CHECK(IntegratorConfig{Scheme::RK4, 0.3, 1.0, 1}.step_count() == 4);
  CHECK(IntegratorConfig{Scheme::RK4, 0.1, 0.0, 1}.step_count() == 0);
  CHECK_THROWS_AS((IntegratorConfig{Scheme::RK4, 0.0, 1.0, 1}.validate()), InputError);
  CHECK_THROWS_AS((IntegratorConfig{Scheme::RK4, 2.0, 1.0, 1}.validate()), InputError);
  CHECK_THROWS_AS((IntegratorConfig{Scheme::RK4, 0.1, 1.0, 0}.validate()), InputError);
}

TEST_CASE("records start at zero, follow the stride and end at t_end") {
  const auto s = case_a();
  const auto traj = integrate(Model::KBCS, s, Topology::uniform(3), derive_T0(s), IntegratorConfig{Scheme::RK4, 0.3, 1.0, 2});
  REQUIRE(traj.size() == 3);
  CHECK(traj.times[0] == 0.0);
  CHECK(traj.times[1] == Approx(0.6));
  CHECK(traj.times[2] == 1.0);
  CHECK(traj.initial() == s);
}

TEST_CASE("last step is shortened to land on t_end") {
  const auto s = case_a();
  const auto T0 = derive_T0(s);
  const auto traj = integrate(Model::KBCS, s, Topology::uniform(3), T0, IntegratorConfig{Scheme::RK4, 0.3, 1.0, 1});
  CHECK(traj.times.back() == 1.0);
  const auto exact = closed_form_kbcs_uniform(s, T0, 1.0);
  CHECK(detail::sup_distance(traj.final(), exact) < 1e-3);
}

TEST_CASE("ill-prepared data are rejected") {
  auto s = case_a();
  s.u[0] += 0.1;
  CHECK_THROWS_AS(integrate(Model::KBCS, s, Topology::uniform(3), derive_T0(case_a()), IntegratorConfig{}), InputError);
}

TEST_CASE("a single step matches the closed form to fifth order") {
  const auto s = case_a();
  const auto T0 = derive_T0(s);
  const double e1 = detail::sup_distance(step(Model::KBCS, s, Topology::uniform(3), T0, 0.02), closed_form_kbcs_uniform(s, T0, 0.02));
  const double e2 = detail::sup_distance(step(Model::KBCS, s, Topology::uniform(3), T0, 0.01), closed_form_kbcs_uniform(s, T0, 0.01));
  CHECK(std::log2(e1 / e2) == Approx(5.0).margin(0.3));
}

TEST_CASE("total momentum and energy are conserved to rounding") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = 2 + seed % 4;
    const auto s = random_admissible_state(n, 2, seed);
    const auto T0 = derive_T0(s);
    const Topology topo = seed % 2 ? Topology::metric(0.5) : Topology::constant(random_symmetric_matrix(n, 0.5, 3, seed));
    for (auto m : {Model::PBCS, Model::KBCS}) {
      const auto traj = integrate(m, s, topo, T0, IntegratorConfig{Scheme::RK4, 1e-3, 2.0, 100});
      for (const auto& st : traj.states) {
        const auto r = validate_initial(st, T0, 1e-12);
        CHECK(r.momentum_ok());
        CHECK(r.energy_ok());
        CHECK(r.centroid_ok());
      }
    }
  }
}

TEST_CASE("explicit Euler blows through the temperature floor on stiff data") {
  const auto s = case_a();
  try {
    integrate(Model::PBCS, s, Topology::uniform(3), derive_T0(s), IntegratorConfig{Scheme::ExplicitEuler, 1e-2, 1.0, 1});
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK(e.time().has_value());
    CHECK(e.temperature() <= kTemperatureFloor);
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
}

TEST_CASE("identical inputs give identical trajectories") {
  const auto s = random_admissible_state(4, 2, 3);
  const auto T0 = derive_T0(s);
  const auto a = integrate(Model::PBCS, s, Topology::metric(0.25), T0, IntegratorConfig{Scheme::RK4, 1e-2, 1.0, 1});
  const auto b = integrate(Model::PBCS, s, Topology::metric(0.25), T0, IntegratorConfig{Scheme::RK4, 1e-2, 1.0, 1});
  CHECK(a.states == b.states);
  CHECK(a.times == b.times);
}

TEST_CASE("empirical convergence orders") {
  const auto s = case_a();
  const auto T0 = derive_T0(s);
  const auto topo = Topology::uniform(3);
  const std::vector<double> dts{0.1, 0.05, 0.025, 0.0125};
  const auto exact = closed_form_kbcs_uniform(s, T0, 2.0);
  CHECK(convergence_order(Model::KBCS, s, topo, T0, Scheme::RK4, 2.0, dts, exact) == Approx(4.0).margin(0.25));
  CHECK(convergence_order(Model::KBCS, s, topo, T0, Scheme::ExplicitEuler, 2.0, dts, exact) ==
        Approx(1.0).margin(0.25));
  CHECK_THROWS_AS(convergence_order(Model::KBCS, s, topo, T0, Scheme::RK4, 1.0, {0.1, 0.05}), InputError);
}
