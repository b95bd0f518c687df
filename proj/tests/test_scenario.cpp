#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "thermoflock/runner.hpp"
#include "thermoflock/scenario.hpp"

using namespace thermoflock;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "pair",
  "model": "kbcs",
  "topology": {"matrix": [[0, 1], [1, 0]]},
  "initial": {"x": [-0.5, 0.5], "u": [0.2, -0.2], "T": [1.0, 2.0]},
  "t0": "derive",
  "integrator": {"scheme": "rk4", "dt": 0.01, "t_end": 1.0, "record_every": 10},
  "checks": ["conservation", "entropy", "envelope"]
})";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(std::string_view(text));
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("thermoflock_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("exactly six builtins are listed") {
  std::vector<std::string> names;
  for (const auto& b : list_builtins()) names.push_back(b.name);
  CHECK(names == std::vector<std::string>{"case-a", "case-b-1", "case-b-2", "prop52", "prop53", "uniform-oracle"});
  for (const auto& n : names) CHECK_NOTHROW(builtin(n));
  CHECK_THROWS_AS(builtin("case-c"), InputError);
}

TEST_CASE("builtin data") {
  const auto a = builtin("case-a");
  CHECK(a.T0.value() == Approx(13.01 / 3.0).epsilon(1e-15));
  CHECK(a.integrator.dt == 1e-3);
  CHECK(a.model == ModelSelection::Both);
  CHECK(builtin("case-b-1").integrator.dt == 1e-4);
  CHECK(builtin("case-b-2").raw.u == std::vector<double>{1, 2, -1, -2});
  CHECK(builtin("prop52").raw.u == std::vector<double>{4, 3, -7});
  CHECK(builtin("prop53").raw.T == std::vector<double>{2, 1, 1});
  CHECK(builtin("uniform-oracle").model == ModelSelection::KBCS);
}

TEST_CASE("minimal scenario parses") {
  const auto sc = parse_scenario(std::string_view(kMinimal));
  CHECK(sc.name == "pair");
  CHECK(sc.n() == 2);
  CHECK(sc.d() == 1);
  CHECK(sc.T0.value() == Approx(1.52));
  CHECK(sc.integrator.record_every == 10);
  CHECK(sc.checks.size() == 3);
}

TEST_CASE("scenario errors name the field") {
  CHECK(error_of("{").find("not valid JSON") != std::string::npos);
  std::string asym = kMinimal;
  asym.replace(asym.find("[[0, 1], [1, 0]]"), 16, "[[0, 1], [2, 0]]");
  CHECK(error_of(asym).find("topology.matrix") != std::string::npos);

  std::string no_T = kMinimal;
  const std::string T_field = ", \"T\": [1.0, 2.0]";
  no_T.replace(no_T.find(T_field), T_field.size(), "");
  CHECK(error_of(no_T).find("initial.T") != std::string::npos);

  std::string bad_T = kMinimal;
  bad_T.replace(bad_T.find("[1.0, 2.0]"), 10, "[1.0, -2.0]");
  CHECK(error_of(bad_T).find("initial.T[1]") != std::string::npos);

  std::string bad_check = kMinimal;
  bad_check.replace(bad_check.find("\"envelope\""), 10, "\"spectral\"");
  CHECK(error_of(bad_check).find("spectral") != std::string::npos);

  std::string bad_model = kMinimal;
  bad_model.replace(bad_model.find("\"kbcs\""), 6, "\"xx\"");
  CHECK(error_of(bad_model).find("model") != std::string::npos);

  std::string bad_dim = kMinimal;
  bad_dim.replace(bad_dim.find("\"model\""), 7, "\"dimension\": 2, \"model\"");
  CHECK(error_of(bad_dim).find("dimension") != std::string::npos);
}

TEST_CASE("fixed reference temperature is cross-checked") {
  std::string fixed = kMinimal;
  fixed.replace(fixed.find("\"derive\""), 8, "{\"fixed\": 1.52}");
  CHECK(parse_scenario(std::string_view(fixed)).T0.value() == 1.52);
  std::string wrong = kMinimal;
  wrong.replace(wrong.find("\"derive\""), 8, "{\"fixed\": 1.53}");
  CHECK(error_of(wrong).find("t0") != std::string::npos);
}

TEST_CASE("metric topology and vector data") {
  const auto sc = parse_scenario(std::string_view(R"({
    "topology": {"metric": {"lambda": 0.25}},
    "initial": {"x": [[0, 1], [1, 0], [2, 2]], "u": [[1, 0], [0, 1], [-1, -1]], "T": [1, 1, 1]}
  })"));
  CHECK(sc.topology.is_metric());
  CHECK(sc.d() == 2);
  CHECK(sc.model == ModelSelection::Both);
}

TEST_CASE("json round trip preserves the scenario") {
  for (const auto& b : list_builtins()) {
    const auto sc = builtin(b.name);
    const auto again = parse_scenario(std::string_view(to_json(sc).dump()));
    CHECK(again.raw == sc.raw);
    CHECK(again.initial == sc.initial);
    CHECK(again.T0 == sc.T0);
    CHECK(again.topology == sc.topology);
    CHECK(again.checks == sc.checks);
  }
}

TEST_CASE("load_scenario reports missing files") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
}

TEST_CASE("csv writers") {
  const auto sc = parse_scenario(std::string_view(kMinimal));
  const auto traj = integrate(Model::KBCS, sc.initial, sc.topology, sc.T0, sc.integrator);
  std::ostringstream t, d;
  write_trajectory_csv(t, traj);
  write_diagnostics_csv(d, diagnose(traj));
  CHECK(t.str().rfind("t,x1,x2,u1,u2,T1,T2\n", 0) == 0);
  CHECK(d.str().rfind("t,X,V,E,S,Sigma,mom_res,energy_res,minT\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : t.str()) lines += c == '\n';
  CHECK(lines == traj.size() + 1);

  Trajectory wide = traj;
  for (auto& s : wide.states) s = MixtureState::from_rows({{0, 0}, {1, 1}}, {{0, 0}, {0, 0}}, {1, 1});
  std::ostringstream w;
  write_trajectory_csv(w, wide);
  CHECK(w.str().rfind("t,x1_1,x1_2,x2_1,x2_2,u1_1,u1_2,u2_1,u2_2,T1,T2\n", 0) == 0);
  // 17 significant digits survive a round trip.
  CHECK(std::stod(detail::fmt17(0.1)) == 0.1);
  CHECK(detail::fmt17(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("run writes outputs and a report") {
  const auto dir = scratch("run");
  auto sc = parse_scenario(std::string_view(kMinimal));
  sc.checks.push_back("nonmonotonicity");
  const auto r = run(sc, dir);
  CHECK(r.exit_code == kExitOk);
  CHECK(fs::exists(dir / "traj_kbcs.csv"));
  CHECK(fs::exists(dir / "diag_kbcs.csv"));
  CHECK(slurp(dir / "report.txt").find("pass  conservation [kbcs]") != std::string::npos);
  CHECK(r.outcomes.size() == 4);
  fs::remove_all(dir);
}

TEST_CASE("run with both models writes the deviation file") {
  const auto dir = scratch("both");
  auto sc = parse_scenario(std::string_view(kMinimal));
  sc.model = ModelSelection::Both;
  sc.checks = {"deviation"};
  const auto r = run(sc, dir);
  CHECK(r.exit_code == kExitOk);
  CHECK(slurp(dir / "deviation.csv").rfind("t,dx1,dx2,du1,du2,dE1,dE2\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("run reports integration failures with exit code 3") {
  const auto dir = scratch("blowup");
  auto sc = builtin("case-a");
  sc.model = ModelSelection::PBCS;
  sc.integrator = IntegratorConfig{Scheme::ExplicitEuler, 1e-2, 1.0, 1};
  sc.checks = {"conservation"};
  const auto r = run(sc, dir);
  CHECK(r.exit_code == kExitIntegrationError);
  CHECK(r.report.find("integration") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unwritable output directory is an I/O error") {
  const auto blocker = scratch("blocker");
  std::ofstream(blocker) << "file";
  CHECK_THROWS_AS(run(builtin("prop53"), blocker / "sub"), IoError);
  fs::remove(blocker);
}
