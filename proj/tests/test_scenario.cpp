#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace hybrid_routh;
using support::state;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "hybrid_routh_tests" / name;
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<double> fields(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

TEST_CASE("minimal document gets defaults") {
  const Scenario s =
      parse_scenario(R"({"model": "slip", "task": "simulate", "initial_state": [0.9, 0, 0, 1]})");
  CHECK(s.model == ModelKind::slip);
  CHECK(s.slip.slip == SlipParams{});
  CHECK(s.slip_reset == SlipReset::symmetric);
  CHECK(s.numerics == Numerics{});
  CHECK(s.outputs.stride == 1);
  CHECK(state_names(s) == std::vector<std::string>{"xi", "phi", "xidot", "phidot"});
}

TEST_CASE("parse errors name the field") {
  CHECK(error_of(R"({"model": "slip", "task": "simulate", "initial_state": [0.9, 0, 0, 1],
                     "numerics": {"tol": -1}})")
            .find("numerics.tol") != std::string::npos);
  CHECK(error_of(R"({"model": "slip", "task": "simulate", "initial_state": [0.9, 0, 0, 1],
                     "numerics": {"tolerance": 1e-8}})")
            .find("numerics.tolerance") != std::string::npos);
  CHECK(error_of(R"({"model": "slip", "task": "simulate", "initial_state": [0.9, 0, 0, 1],
                     "params": {"kappa": "stiff"}})")
            .find("params.kappa") != std::string::npos);
  CHECK(error_of(R"({"model": "slip", "task": "simulate", "initial_state": [0.9, 0]})")
            .find("initial_state") != std::string::npos);
  CHECK(error_of(R"({"model": "robot", "task": "simulate"})").find("model") != std::string::npos);
  CHECK(error_of(R"({"task": "simulate"})").find("model") != std::string::npos);
  CHECK(error_of(R"({"model": "controlled_slip", "task": "zero_dynamics",
                     "initial_state": [0.9, 0, 0, 1], "params": {"m": 2}})")
            .find("params.m") != std::string::npos);
  CHECK(error_of("{not json").find("JSON") != std::string::npos);
  CHECK_NOTHROW(parse_scenario(R"({"model": "slip", "task": "check_suite"})"));
}

TEST_CASE("scenario round trip") {
  Scenario s = support::fixture("slip_poincare.json");
  s.numerics.tol = 0.1;
  s.description = "round \"trip\"";
  const std::string text = dump_json(to_json(s));
  CHECK(parse_scenario(text) == s);
  CHECK(text.find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("json number formatting") {
  CHECK(dump_json(Json(0.1), 0) == "0.10000000000000001\n");
  CHECK(dump_json(Json(3), 0) == "3\n");
  CHECK_THROWS_AS(dump_json(Json(std::nan(""))), NumericalError);
}

TEST_CASE("trajectory CSV") {
  const SlipModel m = slip_system({});
  const HybridTrajectory traj = run_hybrid(m.spec, state({0.9, 0.0, 0.0, 1.0}), 0.0, 2.0);
  REQUIRE(traj.impacts.size() >= 2);
  std::stringstream os;
  write_trajectory_csv(os, traj, {"xi", "phi", "xidot", "phidot"}, 3);
  std::vector<std::string> lines;
  for (std::string l; std::getline(os, l);) lines.push_back(l);
  CHECK(lines.front() == "t,xi,phi,xidot,phidot,segment");

  double last_t = -1.0;
  int last_seg = 0, switches = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = fields(lines[i]);
    REQUIRE(f.size() == 6);
    CHECK(f[0] >= last_t);
    const int seg = static_cast<int>(f[5]);
    if (seg != last_seg) {
      CHECK(seg == last_seg + 1);
      CHECK(f[0] == last_t);
      ++switches;
    }
    last_t = f[0];
    last_seg = seg;
  }
  CHECK(switches == static_cast<int>(traj.impacts.size()));
}

TEST_CASE("periodic orbit task") {
  const Scenario s = support::fixture("slip_periodic_orbit.json");
  const auto dir = scratch("orbit");
  const RunReport rep = run(s, dir);
  CHECK(rep.passed());
  CHECK(exit_code(rep) == 0);
  REQUIRE(rep.orbit);
  CHECK(rep.orbit->closure_residual <= 1e-6);
  CHECK(rep.impact_times.size() == 1);

  const auto lines = lines_of(dir / s.outputs.trajectory);
  CHECK(lines.front() == "t,xi,phi,xidot,phidot,segment");
  std::ifstream in(dir / s.outputs.report);
  const Json doc = Json::parse(in);
  CHECK(doc.at("passed") == true);
  CHECK(doc.at("impacts").at("count") == 1);
  CHECK(parse_scenario(doc.at("scenario")) == s);
}

TEST_CASE("poincare task") {
  const Scenario s = support::fixture("slip_poincare.json");
  const RunReport rep = run(s, scratch("poincare"));
  REQUIRE(rep.stability);
  CHECK(rep.stability->eigenvalues.size() == 3);
  CHECK(rep.fix_dimension == 2);
  CHECK(rep.reset_rank == 3);
  REQUIRE(rep.stability->bounds);
  CHECK(rep.stability->bounds->all());
  CHECK(rep.passed());
  const Json doc = to_json(rep);
  CHECK(doc.at("stability").at("bounds").at("bounds_ok") == true);
  CHECK(doc.at("stability").at("eigenvalues").size() == 3);
}

TEST_CASE("check suite task") {
  const Scenario s = support::fixture("slip_check_suite.json");
  const RunReport rep = run(s, scratch("suite"));
  std::vector<std::string> names;
  for (const auto& c : rep.checks) names.push_back(c.name);
  for (const char* n : {"involution_residual", "reversibility_residual", "routhian_symmetry",
                        "engine_vs_analytic_field"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK(rep.passed());
}

TEST_CASE("zero dynamics task") {
  const Scenario s = support::fixture("controlled_slip_zero_dynamics.json");
  const RunReport rep = run(s, scratch("zero"));
  for (const auto& c : rep.checks) {
    CAPTURE(c.name);
    CHECK(c.passed);
  }
  REQUIRE(rep.orbit);
}

TEST_CASE("pendulum simulate task") {
  const Scenario s = support::fixture("pendulum_simulate.json");
  const RunReport rep = run(s, scratch("pendulum"));
  CHECK(rep.passed());
  CHECK(rep.impact_times.empty());
  CHECK(state_names(s) == std::vector<std::string>{"r", "rdot"});
}

TEST_CASE("exit codes and failures") {
  Scenario s = parse_scenario(R"({"model": "custom", "task": "simulate"})");
  CHECK_THROWS_AS(run(s, scratch("custom")), InputError);
  CHECK(exit_code(InputError("x")) == 2);
  CHECK(exit_code(ZenoError("x")) == 3);
  CHECK(exit_code(NumericalError("x")) == 3);

  RunReport failing;
  failing.checks.push_back({"closure", false, 1.0, 1e-6});
  CHECK(exit_code(failing) == 1);

  Scenario ok = support::fixture("pendulum_simulate.json");
  ok.outputs.trajectory = "missing_dir/deeper/out.csv";
  CHECK_THROWS_AS(run(ok, "/proc/definitely/not/writable"), InputError);
}
