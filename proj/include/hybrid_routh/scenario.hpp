#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybrid_routh/models.hpp"
#include "hybrid_routh/poincare.hpp"

namespace hybrid_routh {

using Json = nlohmann::ordered_json;

enum class ModelKind { pendulum, slip, controlled_slip, custom };
enum class TaskKind { simulate, periodic_orbit, poincare, zero_dynamics, check_suite };

std::string to_string(ModelKind m);
std::string to_string(TaskKind t);
ModelKind parse_model_kind(const std::string& s);
TaskKind parse_task_kind(const std::string& s);

struct Numerics {
  double tol = 1e-10;
  double event_tol = 1e-10;
  double t_max = 10.0;
  long max_impacts = 10'000;
  double fd_step = 1e-5;
  double min_inter_impact = 1e-6;

  bool operator==(const Numerics&) const = default;
};

/// Acceptance thresholds and sampling for the analysis tasks.
struct Analysis {
  double closure_tol = 1e-6;
  double symmetry_tol = 1e-6;
  double tol0 = 1e-4;
  double tol1 = 1e-4;
  int samples = 1000;
  unsigned long rng_seed = 1;

  bool operator==(const Analysis&) const = default;
};

struct Outputs {
  std::string trajectory = "trajectory.csv";
  std::string report = "report.json";
  int stride = 1;

  bool operator==(const Outputs&) const = default;
};

struct Scenario {
  std::string description;
  ModelKind model = ModelKind::slip;
  TaskKind task = TaskKind::simulate;
  PendulumParams pendulum;
  ControlledSlipParams slip;  // slip.slip is used by the open-loop SLIP
  SlipReset slip_reset = SlipReset::symmetric;
  std::vector<double> initial_state;
  Numerics numerics;
  Analysis analysis;
  Outputs outputs;

  bool operator==(const Scenario&) const = default;
};

/// Strict parse: unknown keys, wrong types and invalid values raise
/// InputError naming the offending field.
Scenario parse_scenario(const std::string& text);
inline Scenario parse_scenario(const char* text) { return parse_scenario(std::string(text)); }
Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Full document with every default written out.
Json to_json(const Scenario& s);

/// Coordinate labels of the model's state vector.
std::vector<std::string> state_names(const Scenario& s);

struct CheckResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
};

struct OrbitSummary {
  StateVector seed;
  double half_period = 0.0;
  double closure_residual = 0.0;
  double time_symmetry_residual = 0.0;
};

struct RunReport {
  Scenario scenario;
  std::optional<OrbitSummary> orbit;
  std::optional<StabilityReport> stability;
  std::optional<int> fix_dimension;  // r
  std::optional<int> reset_rank;     // beta
  std::vector<double> impact_times;
  StateVector final_state;
  std::vector<CheckResult> checks;
  double wall_clock_seconds = 0.0;

  bool passed() const;
};

Json to_json(const RunReport& r);

/// Executes the scenario. Output paths are taken relative to `out_dir`;
/// the CSV and the report document are written before returning.
RunReport run(const Scenario& s, const std::filesystem::path& out_dir = ".");

/// Header `t,<names>,segment`; one row per kept sample. Every segment's
/// first and last sample is kept, so each impact shows up as two rows with
/// the same t.
void write_trajectory_csv(std::ostream& os, const HybridTrajectory& traj,
                          const std::vector<std::string>& names, int stride = 1);

/// JSON text with every floating-point number printed to 17 significant
/// digits. Non-finite numbers raise NumericalError.
std::string dump_json(const Json& doc, int indent = 2);

/// 0 success, 1 check failure, 2 input error, 3 numerical failure.
int exit_code(const RunReport& r);
int exit_code(const Error& e);

}  // namespace hybrid_routh
