#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermoflock/thermoflock.hpp"

namespace tf = thermoflock;

namespace {

struct RunOptions {
  std::string source;
  std::optional<std::string> model;
  std::string out = "out";
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::string> scheme;
  std::vector<std::string> checks;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> record_every;
};

tf::Scenario random_scenario(std::size_t n, std::uint64_t seed) {
  tf::Scenario sc;
  sc.name = "random-" + std::to_string(n) + "-" + std::to_string(seed);
  sc.description = "seeded random admissible data";
  sc.model = tf::ModelSelection::Both;
  sc.topology = tf::Topology::constant(tf::random_symmetric_matrix(n, 0.5, 3.0, seed + 1));
  sc.raw = tf::random_admissible_state(n, 1, seed);
  sc.integrator = tf::IntegratorConfig{tf::Scheme::RK4, 1e-3, 5.0, 10};
  sc.checks = {"conservation", "entropy", "envelope", "nonmonotonicity"};
  tf::prepare(sc);
  return sc;
}

tf::Scenario resolve(const RunOptions& opt) {
  const std::string& src = opt.source;
  if (src.rfind("builtin:", 0) == 0) return tf::builtin(src.substr(8));
  if (src.rfind("random:", 0) == 0) {
    if (!opt.seed) throw tf::InputError("random scenarios need an explicit --seed");
    std::size_t n = 0;
    try {
      n = std::stoul(src.substr(7));
    } catch (const std::exception&) {
      throw tf::InputError("random:N expects a particle count, got '" + src.substr(7) + "'");
    }
    if (n < 2) throw tf::InputError("random:N needs N >= 2");
    return random_scenario(n, *opt.seed);
  }
  return tf::load_scenario(src);
}

int do_run(const RunOptions& opt) {
  try {
    tf::Scenario sc = resolve(opt);
    if (opt.model) sc.model = tf::parse_model_selection(*opt.model);
    if (opt.dt) sc.integrator.dt = *opt.dt;
    if (opt.t_end) sc.integrator.t_end = *opt.t_end;
    if (opt.scheme) sc.integrator.scheme = tf::parse_scheme(*opt.scheme);
    if (opt.record_every) sc.integrator.record_every = *opt.record_every;
    if (!opt.checks.empty()) sc.checks = opt.checks;
    tf::prepare(sc);
    const tf::RunResult r = tf::run(sc, opt.out);
    std::cout << r.report;
    return r.exit_code;
  } catch (const tf::IntegrationError& e) {
    std::cerr << "integration failed: " << e.what() << "\n";
    return tf::kExitIntegrationError;
  } catch (const tf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tf::kExitInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermo-mechanical Cucker-Smale simulator and verifier"};
  app.require_subcommand(1);

  app.add_subcommand("list", "List built-in scenarios")->callback([] {
    for (const auto& b : tf::list_builtins()) std::cout << b.name << "\t" << b.description << "\n";
  });

  std::string export_name;
  auto* exp = app.add_subcommand("export", "Print a built-in scenario as JSON");
  exp->add_option("source", export_name, "builtin:NAME")->required();

  RunOptions opt;
  auto* run = app.add_subcommand("run", "Integrate a scenario and run its checks");
  run->add_option("source", opt.source, "scenario file, builtin:NAME or random:N")->required();
  run->add_option("--model", opt.model, "pbcs, kbcs or both");
  run->add_option("--out", opt.out, "output directory")->capture_default_str();
  run->add_option("--dt", opt.dt, "time step");
  run->add_option("--t-end", opt.t_end, "final time");
  run->add_option("--scheme", opt.scheme, "rk4 or euler");
  run->add_option("--check", opt.checks, "check to run (repeatable)");
  run->add_option("--seed", opt.seed, "seed for random:N scenarios");
  run->add_option("--record-every", opt.record_every, "record every k-th step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tf::kExitInputError;
  }

  if (*exp) {
    try {
      if (export_name.rfind("builtin:", 0) != 0) throw tf::InputError("export expects builtin:NAME");
      std::cout << tf::to_json(tf::builtin(export_name.substr(8))).dump(2) << "\n";
    } catch (const tf::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return tf::kExitInputError;
    }
  }
  if (*run) return do_run(opt);
  return 0;
}
