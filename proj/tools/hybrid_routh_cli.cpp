// hybrid-routh: scenario-driven front end.
//
//   hybrid-routh <task> --scenario FILE [--out DIR] [--seed-override a,b,...] [--quiet|--json]
//
// <task> is one of run (use the task named in the file), simulate,
// periodic-orbit, poincare, zero-dynamics, check-suite, or validate (parse
// and echo the normalized scenario).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "hybrid_routh/scenario.hpp"

using namespace hybrid_routh;

namespace {

struct Options {
  std::string scenario;
  std::string out = ".";
  std::vector<double> seed_override;
  bool quiet = false;
  bool json = false;
};

void print_summary(const RunReport& r, const std::filesystem::path& out) {
  const Scenario& s = r.scenario;
  std::cout << to_string(s.task) << " on " << to_string(s.model) << ": "
            << (r.passed() ? "PASS" : "FAIL") << "\n";
  std::cout << "  impacts: " << r.impact_times.size() << "\n";
  if (r.orbit) {
    std::cout << "  half period: " << r.orbit->half_period
              << "\n  closure residual: " << r.orbit->closure_residual
              << "\n  time-symmetry residual: " << r.orbit->time_symmetry_residual << "\n";
  }
  if (r.stability) {
    std::cout << "  eigenvalues:";
    for (const auto& l : r.stability->eigenvalues) std::cout << " " << l;
    std::cout << "\n  Lambda0 = " << r.stability->lambda0_count
              << ", Lambda1 = " << r.stability->lambda1_count << ", "
              << to_string(r.stability->classification) << "\n";
  }
  for (const auto& c : r.checks)
    std::cout << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name << ": " << c.residual
              << " (tol " << c.tolerance << ")\n";
  std::cout << "  trajectory: " << (out / s.outputs.trajectory).string()
            << "\n  report: " << (out / s.outputs.report).string() << "\n";
}

int execute(const Options& opt, std::optional<TaskKind> task, bool validate_only) {
  try {
    Json doc;
    {
      std::ifstream in(opt.scenario);
      if (!in) throw InputError("cannot open scenario file " + opt.scenario);
      try {
        doc = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw InputError(opt.scenario + ": " + e.what());
      }
    }
    if (task) doc["task"] = to_string(*task);
    if (!opt.seed_override.empty()) doc["initial_state"] = opt.seed_override;
    const Scenario s = parse_scenario(doc);

    if (validate_only) {
      if (!opt.quiet) std::cout << dump_json(to_json(s));
      return 0;
    }
    const RunReport r = run(s, opt.out);
    if (opt.json) {
      std::cout << dump_json(to_json(r));
    } else if (!opt.quiet) {
      print_summary(r, opt.out);
    }
    return exit_code(r);
  } catch (const Error& e) {
    if (opt.json) {
      Json err = {{"error", e.what()}, {"exit_code", exit_code(e)}};
      std::cout << dump_json(err);
    }
    std::cerr << "hybrid-routh: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "hybrid-routh: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simple hybrid Routhian systems: simulation, symmetric periodic orbits, "
               "Poincare stability and zero dynamics"};
  app.require_subcommand(1);

  Options opt;
  struct Command {
    const char* name;
    const char* help;
    std::optional<TaskKind> task;
    bool validate;
  };
  const Command commands[] = {
      {"run", "Run the task named in the scenario file", std::nullopt, false},
      {"simulate", "Integrate the hybrid system", TaskKind::simulate, false},
      {"periodic-orbit", "Build the symmetric periodic orbit through the seed",
       TaskKind::periodic_orbit, false},
      {"poincare", "Return-map Jacobian, eigenvalues and spectral bounds", TaskKind::poincare,
       false},
      {"zero-dynamics", "Closed-loop orbit on the zero-dynamics manifold",
       TaskKind::zero_dynamics, false},
      {"check-suite", "Symmetry, reversibility and invariance residuals", TaskKind::check_suite,
       false},
      {"validate", "Parse the scenario and print it with defaults filled in", std::nullopt, true},
  };

  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--scenario", opt.scenario, "Scenario file (JSON)")->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory for the CSV and the report");
    sub->add_option("--seed-override", opt.seed_override,
                    "Replace initial_state, comma separated")
        ->delimiter(',');
    auto* quiet = sub->add_flag("--quiet", opt.quiet, "Print nothing on success");
    auto* json = sub->add_flag("--json", opt.json, "Print the report document on stdout");
    quiet->excludes(json);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& [sub, cmd] : subs)
    if (sub->parsed()) return execute(opt, cmd->task, cmd->validate);
  return 2;
}
