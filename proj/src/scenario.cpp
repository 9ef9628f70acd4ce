#include "hybrid_routh/scenario.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace hybrid_routh {

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::pendulum: return "pendulum";
    case ModelKind::slip: return "slip";
    case ModelKind::controlled_slip: return "controlled_slip";
    case ModelKind::custom: return "custom";
  }
  return "custom";
}

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::simulate: return "simulate";
    case TaskKind::periodic_orbit: return "periodic_orbit";
    case TaskKind::poincare: return "poincare";
    case TaskKind::zero_dynamics: return "zero_dynamics";
    case TaskKind::check_suite: return "check_suite";
  }
  return "simulate";
}

ModelKind parse_model_kind(const std::string& s) {
  for (ModelKind m : {ModelKind::pendulum, ModelKind::slip, ModelKind::controlled_slip,
                      ModelKind::custom})
    if (to_string(m) == s) return m;
  throw InputError("model: unknown model '" + s + "'");
}

TaskKind parse_task_kind(const std::string& s) {
  for (TaskKind t : {TaskKind::simulate, TaskKind::periodic_orbit, TaskKind::poincare,
                     TaskKind::zero_dynamics, TaskKind::check_suite})
    if (to_string(t) == s) return t;
  throw InputError("task: unknown task '" + s + "'");
}

// ---------------------------------------------------------------------------
// Strict reading

namespace {

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw InputError((path.empty() ? "document" : path) + ": expected an object");
}

void reject_unknown(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw InputError(join_path(path, key) + ": unknown key");
}

void read_number(const Json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_number()) throw InputError(join_path(path, key) + ": expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) throw InputError(join_path(path, key) + ": must be finite");
}

template <typename Int>
void read_integer(const Json& j, const std::string& path, const char* key, Int& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw InputError(join_path(path, key) + ": expected an integer");
  if (v.is_number_unsigned()) {
    out = static_cast<Int>(v.get<std::uint64_t>());
  } else {
    const auto x = v.get<std::int64_t>();
    if constexpr (std::is_unsigned_v<Int>)
      if (x < 0) throw InputError(join_path(path, key) + ": must be non-negative");
    out = static_cast<Int>(x);
  }
}

void read_string(const Json& j, const std::string& path, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_string()) throw InputError(join_path(path, key) + ": expected a string");
  out = v.get<std::string>();
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << field << ": must be positive (got " << v << ")";
    throw InputError(os.str());
  }
}

void read_pendulum(const Json& j, PendulumParams& p) {
  reject_unknown(j, "params", {"m", "k", "mu"});
  read_number(j, "params", "m", p.m);
  read_number(j, "params", "k", p.k);
  read_number(j, "params", "mu", p.mu);
  require_positive(p.m, "params.m");
  require_positive(p.k, "params.k");
}

void read_slip(const Json& j, SlipParams& p, const std::set<std::string>& extra) {
  std::set<std::string> allowed = {"m", "I", "g", "l0", "kappa", "phi0", "mu"};
  allowed.insert(extra.begin(), extra.end());
  reject_unknown(j, "params", allowed);
  read_number(j, "params", "m", p.m);
  read_number(j, "params", "I", p.I);
  read_number(j, "params", "g", p.g);
  read_number(j, "params", "l0", p.l0);
  read_number(j, "params", "kappa", p.kappa);
  read_number(j, "params", "phi0", p.phi0);
  read_number(j, "params", "mu", p.mu);
  require_positive(p.m, "params.m");
  require_positive(p.I, "params.I");
  require_positive(p.g, "params.g");
  require_positive(p.l0, "params.l0");
  require_positive(p.kappa, "params.kappa");
  if (!(p.phi0 > 0.0 && p.phi0 < std::numbers::pi / 2))
    throw InputError("params.phi0: must lie in (0, pi/2)");
}

std::size_t state_size(ModelKind m) {
  switch (m) {
    case ModelKind::pendulum: return 2;
    case ModelKind::slip:
    case ModelKind::controlled_slip: return 4;
    case ModelKind::custom: return 0;
  }
  return 0;
}

}  // namespace

Scenario parse_scenario(const Json& doc) {
  require_object(doc, "");
  reject_unknown(doc, "", {"description", "model", "task", "params", "initial_state", "numerics",
                           "analysis", "outputs"});
  Scenario s;
  read_string(doc, "", "description", s.description);

  if (!doc.contains("model")) throw InputError("model: required");
  std::string name;
  read_string(doc, "", "model", name);
  s.model = parse_model_kind(name);
  if (!doc.contains("task")) throw InputError("task: required");
  read_string(doc, "", "task", name);
  s.task = parse_task_kind(name);

  const Json params = doc.contains("params") ? doc.at("params") : Json::object();
  require_object(params, "params");
  switch (s.model) {
    case ModelKind::pendulum:
      read_pendulum(params, s.pendulum);
      break;
    case ModelKind::slip: {
      read_slip(params, s.slip.slip, {"reset"});
      std::string reset = "symmetric";
      read_string(params, "params", "reset", reset);
      if (reset == "symmetric") s.slip_reset = SlipReset::symmetric;
      else if (reset == "fixed_touchdown") s.slip_reset = SlipReset::fixed_touchdown;
      else throw InputError("params.reset: expected 'symmetric' or 'fixed_touchdown'");
      break;
    }
    case ModelKind::controlled_slip:
      read_slip(params, s.slip.slip, {"c0", "c2"});
      read_number(params, "params", "c0", s.slip.c0);
      read_number(params, "params", "c2", s.slip.c2);
      require_positive(s.slip.c0, "params.c0");
      require_positive(s.slip.c2, "params.c2");
      if (s.slip.slip.m != 1.0) throw InputError("params.m: the controlled SLIP requires m = 1");
      break;
    case ModelKind::custom:
      reject_unknown(params, "params", {});
      break;
  }

  if (doc.contains("initial_state")) {
    const Json& v = doc.at("initial_state");
    if (!v.is_array()) throw InputError("initial_state: expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw InputError("initial_state[" + std::to_string(i) + "]: expected a number");
      const double x = v[i].get<double>();
      if (!std::isfinite(x))
        throw InputError("initial_state[" + std::to_string(i) + "]: must be finite");
      s.initial_state.push_back(x);
    }
  }
  const std::size_t n = state_size(s.model);
  if (!s.initial_state.empty() && n != 0 && s.initial_state.size() != n)
    throw InputError("initial_state: expected " + std::to_string(n) + " entries, got " +
                     std::to_string(s.initial_state.size()));
  if (s.initial_state.empty() && s.task != TaskKind::check_suite && s.model != ModelKind::custom)
    throw InputError("initial_state: required for task " + to_string(s.task));

  if (doc.contains("numerics")) {
    const Json& j = doc.at("numerics");
    require_object(j, "numerics");
    reject_unknown(j, "numerics",
                   {"tol", "event_tol", "t_max", "max_impacts", "fd_step", "min_inter_impact"});
    read_number(j, "numerics", "tol", s.numerics.tol);
    read_number(j, "numerics", "event_tol", s.numerics.event_tol);
    read_number(j, "numerics", "t_max", s.numerics.t_max);
    read_integer(j, "numerics", "max_impacts", s.numerics.max_impacts);
    read_number(j, "numerics", "fd_step", s.numerics.fd_step);
    read_number(j, "numerics", "min_inter_impact", s.numerics.min_inter_impact);
  }
  require_positive(s.numerics.tol, "numerics.tol");
  require_positive(s.numerics.event_tol, "numerics.event_tol");
  require_positive(s.numerics.t_max, "numerics.t_max");
  require_positive(s.numerics.fd_step, "numerics.fd_step");
  require_positive(s.numerics.min_inter_impact, "numerics.min_inter_impact");
  if (s.numerics.max_impacts < 1) throw InputError("numerics.max_impacts: must be at least 1");

  if (doc.contains("analysis")) {
    const Json& j = doc.at("analysis");
    require_object(j, "analysis");
    reject_unknown(j, "analysis",
                   {"closure_tol", "symmetry_tol", "tol0", "tol1", "samples", "rng_seed"});
    read_number(j, "analysis", "closure_tol", s.analysis.closure_tol);
    read_number(j, "analysis", "symmetry_tol", s.analysis.symmetry_tol);
    read_number(j, "analysis", "tol0", s.analysis.tol0);
    read_number(j, "analysis", "tol1", s.analysis.tol1);
    read_integer(j, "analysis", "samples", s.analysis.samples);
    read_integer(j, "analysis", "rng_seed", s.analysis.rng_seed);
  }
  require_positive(s.analysis.closure_tol, "analysis.closure_tol");
  require_positive(s.analysis.symmetry_tol, "analysis.symmetry_tol");
  require_positive(s.analysis.tol0, "analysis.tol0");
  require_positive(s.analysis.tol1, "analysis.tol1");
  if (s.analysis.samples < 1) throw InputError("analysis.samples: must be at least 1");

  if (doc.contains("outputs")) {
    const Json& j = doc.at("outputs");
    require_object(j, "outputs");
    reject_unknown(j, "outputs", {"trajectory", "report", "stride"});
    read_string(j, "outputs", "trajectory", s.outputs.trajectory);
    read_string(j, "outputs", "report", s.outputs.report);
    read_integer(j, "outputs", "stride", s.outputs.stride);
  }
  if (s.outputs.trajectory.empty()) throw InputError("outputs.trajectory: empty path");
  if (s.outputs.report.empty()) throw InputError("outputs.report: empty path");
  if (s.outputs.stride < 1) throw InputError("outputs.stride: must be at least 1");
  return s;
}

Scenario parse_scenario(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Json to_json(const Scenario& s) {
  Json doc;
  doc["description"] = s.description;
  doc["model"] = to_string(s.model);
  doc["task"] = to_string(s.task);

  Json params = Json::object();
  const SlipParams& sp = s.slip.slip;
  switch (s.model) {
    case ModelKind::pendulum:
      params = {{"m", s.pendulum.m}, {"k", s.pendulum.k}, {"mu", s.pendulum.mu}};
      break;
    case ModelKind::slip:
    case ModelKind::controlled_slip:
      params = {{"m", sp.m},         {"I", sp.I},       {"g", sp.g},  {"l0", sp.l0},
                {"kappa", sp.kappa}, {"phi0", sp.phi0}, {"mu", sp.mu}};
      if (s.model == ModelKind::slip) {
        params["reset"] = s.slip_reset == SlipReset::symmetric ? "symmetric" : "fixed_touchdown";
      } else {
        params["c0"] = s.slip.c0;
        params["c2"] = s.slip.c2;
      }
      break;
    case ModelKind::custom:
      break;
  }
  doc["params"] = params;
  doc["initial_state"] = s.initial_state;
  doc["numerics"] = {{"tol", s.numerics.tol},
                     {"event_tol", s.numerics.event_tol},
                     {"t_max", s.numerics.t_max},
                     {"max_impacts", s.numerics.max_impacts},
                     {"fd_step", s.numerics.fd_step},
                     {"min_inter_impact", s.numerics.min_inter_impact}};
  doc["analysis"] = {{"closure_tol", s.analysis.closure_tol},
                     {"symmetry_tol", s.analysis.symmetry_tol},
                     {"tol0", s.analysis.tol0},
                     {"tol1", s.analysis.tol1},
                     {"samples", s.analysis.samples},
                     {"rng_seed", s.analysis.rng_seed}};
  doc["outputs"] = {{"trajectory", s.outputs.trajectory},
                    {"report", s.outputs.report},
                    {"stride", s.outputs.stride}};
  return doc;
}

std::vector<std::string> state_names(const Scenario& s) {
  switch (s.model) {
    case ModelKind::pendulum: return {"r", "rdot"};
    case ModelKind::slip:
    case ModelKind::controlled_slip: return {"xi", "phi", "xidot", "phidot"};
    case ModelKind::custom: return {};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Output formats

namespace {

std::string format_double(double x) {
  if (!std::isfinite(x)) throw NumericalError("refusing to emit a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void dump_value(std::ostream& os, const Json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) os << ',';
        first = false;
        newline(depth + 1);
        os << Json(key).dump() << (indent < 0 ? ":" : ": ");
        dump_value(os, value, indent, depth + 1);
      }
      newline(depth);
      os << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat &= !(v.is_object() || v.is_array());
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << (flat ? ", " : ",");
        first = false;
        if (!flat) newline(depth + 1);
        dump_value(os, v, indent, depth + 1);
      }
      if (!flat) newline(depth);
      os << ']';
      return;
    }
    case Json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string dump_json(const Json& doc, int indent) {
  std::ostringstream os;
  dump_value(os, doc, indent, 0);
  if (indent >= 0) os << '\n';
  return os.str();
}

void write_trajectory_csv(std::ostream& os, const HybridTrajectory& traj,
                          const std::vector<std::string>& names, int stride) {
  os << 't';
  for (const auto& n : names) os << ',' << n;
  os << ",segment\n";
  stride = std::max(1, stride);
  for (std::size_t k = 0; k < traj.segments.size(); ++k) {
    const Segment& seg = traj.segments[k];
    const std::size_t n = seg.times.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != n) continue;
      os << format_double(seg.times[i]);
      for (Eigen::Index c = 0; c < seg.states[i].size(); ++c)
        os << ',' << format_double(seg.states[i][c]);
      os << ',' << k << '\n';
    }
  }
}

bool RunReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

Json to_json(const RunReport& r) {
  Json doc;
  doc["scenario"] = to_json(r.scenario);
  doc["passed"] = r.passed();
  doc["impacts"] = {{"count", r.impact_times.size()}, {"times", r.impact_times}};
  doc["final_state"] = vec_json(r.final_state);
  if (r.orbit) {
    doc["orbit"] = {{"seed", vec_json(r.orbit->seed)},
                    {"half_period", r.orbit->half_period},
                    {"period", 2.0 * r.orbit->half_period},
                    {"closure_residual", r.orbit->closure_residual},
                    {"time_symmetry_residual", r.orbit->time_symmetry_residual}};
  }
  if (r.stability) {
    const StabilityReport& st = *r.stability;
    Json jac = Json::array();
    for (Eigen::Index i = 0; i < st.jacobian.rows(); ++i)
      jac.push_back(vec_json(st.jacobian.row(i).transpose()));
    Json eig = Json::array();
    for (std::size_t i = 0; i < st.eigenvalues.size(); ++i)
      eig.push_back({{"re", st.eigenvalues[i].real()},
                     {"im", st.eigenvalues[i].imag()},
                     {"modulus", std::abs(st.eigenvalues[i])},
                     {"residual", st.eigenvalue_residuals[i]}});
    Json js = {{"jacobian", jac},
               {"eigenvalues", eig},
               {"lambda0_count", st.lambda0_count},
               {"lambda1_count", st.lambda1_count},
               {"tol0", st.tol0},
               {"tol1", st.tol1},
               {"classification", to_string(st.classification)}};
    if (r.fix_dimension) js["r"] = *r.fix_dimension;
    if (r.reset_rank) js["beta"] = *r.reset_rank;
    if (st.bounds) {
      js["bounds"] = {{"lambda0_required", st.bounds->lambda0_required},
                      {"lambda1_required", st.bounds->lambda1_required},
                      {"lemma_ok", st.bounds->lemma_ok},
                      {"theorem_ok", st.bounds->theorem_ok},
                      {"bounds_ok", st.bounds->all()}};
    }
    doc["stability"] = js;
  }
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"residual", c.residual},
                      {"tolerance", c.tolerance}});
  doc["checks"] = checks;
  doc["wall_clock_seconds"] = r.wall_clock_seconds;
  return doc;
}

int exit_code(const RunReport& r) { return r.passed() ? 0 : 1; }

int exit_code(const Error& e) { return e.kind() == ErrorKind::input ? 2 : 3; }

// ---------------------------------------------------------------------------
// Task dispatch

namespace {

struct Built {
  HybridSystemSpec spec;
  ReversalSymmetry symmetry;
  VectorField analytic;                   // open-loop analytic field
  std::optional<RouthianSystem> routhian;
  std::optional<ControlledSlipModel> controlled;
};

void apply_numerics(HybridSystemSpec& spec, const Numerics& n) {
  spec.event_tolerance = n.event_tol;
  spec.min_inter_impact = n.min_inter_impact;
  spec.max_impacts = n.max_impacts;
}

Built build(const Scenario& s) {
  Built b;
  switch (s.model) {
    case ModelKind::pendulum: {
      const PendulumParams p = s.pendulum;
      b.routhian = pendulum_routhian(p);
      b.analytic = [p](const Vec& x) { return pendulum_field(p, x); };
      b.spec.vector_field = b.analytic;
      b.symmetry = pendulum_symmetry();
      break;
    }
    case ModelKind::slip: {
      SlipModel m = slip_system(s.slip.slip, s.slip_reset);
      b.routhian = m.routhian;
      b.analytic = m.field;
      b.spec = m.spec;
      b.symmetry = m.symmetry;
      break;
    }
    case ModelKind::controlled_slip: {
      b.controlled = controlled_slip_system(s.slip);
      b.routhian = b.controlled->plant.base();
      b.analytic = b.controlled->plant.drift();
      b.spec = b.controlled->closed_loop;
      b.symmetry = b.controlled->symmetry;
      break;
    }
    case ModelKind::custom:
      throw InputError(
          "model: custom systems are built through the library API and cannot be run from a "
          "scenario file");
  }
  apply_numerics(b.spec, s.numerics);
  return b;
}

CheckResult check_le(std::string name, double residual, double tol) {
  return {std::move(name), residual <= tol, residual, tol};
}

CheckResult check_ge(std::string name, double value, double bound) {
  return {std::move(name), value >= bound, value, bound};
}

StateVector initial(const Scenario& s) {
  return Eigen::Map<const Vec>(s.initial_state.data(),
                               static_cast<Eigen::Index>(s.initial_state.size()));
}

double energy_drift(const RouthianSystem& sys, const HybridTrajectory& traj) {
  double worst = 0.0;
  for (const auto& seg : traj.segments) {
    const double e0 = reduced_energy(sys, seg.states.front());
    for (const auto& x : seg.states)
      worst = std::max(worst, std::abs(reduced_energy(sys, x) - e0) / std::max(1.0, std::abs(e0)));
  }
  return worst;
}

void record_trajectory(RunReport& rep, const HybridTrajectory& traj) {
  rep.impact_times.clear();
  for (const auto& ev : traj.impacts) rep.impact_times.push_back(ev.time);
  rep.final_state = traj.final_state();
}

OrbitOptions orbit_options(const Scenario& s) {
  OrbitOptions opt;
  opt.tol = s.numerics.tol;
  opt.closure_tol = s.analysis.closure_tol;
  return opt;
}

double u_star_evenness(const ControlledSlipModel& m, int samples, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phi(-1.2, 1.2), w(-3.0, 3.0);
  const LegParams leg = leg_params(m.params.slip);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double p = phi(rng), v = w(rng);
    worst = std::max(worst, std::abs(feedback_u_star(m.manifold, leg, -p, v) -
                                     feedback_u_star(m.manifold, leg, p, v)));
  }
  return worst;
}

std::optional<HybridTrajectory> task_simulate(const Scenario& s, const Built& b, RunReport& rep) {
  HybridTrajectory traj = run_hybrid(b.spec, initial(s), 0.0, s.numerics.t_max, s.numerics.tol);
  record_trajectory(rep, traj);
  if (!b.controlled && b.routhian)
    rep.checks.push_back(check_le("energy_conservation", energy_drift(*b.routhian, traj), 1e-7));
  if (b.controlled && b.controlled->manifold.residual(initial(s)) <= 1e-12)
    rep.checks.push_back(
        check_le("manifold_residual", manifold_residual(b.controlled->manifold, traj), 1e-6));
  return traj;
}

std::optional<HybridTrajectory> task_periodic_orbit(const Scenario& s, const Built& b,
                                                    RunReport& rep) {
  if (!b.spec.guard) throw InputError("task: periodic_orbit needs a model with impacts");
  const PeriodicOrbit orbit =
      construct_periodic_orbit(b.spec, b.symmetry, initial(s), s.numerics.t_max, orbit_options(s));
  rep.orbit = OrbitSummary{orbit.seed, orbit.half_period, orbit.closure_residual,
                           orbit.time_symmetry_residual};
  record_trajectory(rep, orbit.trajectory);
  rep.checks.push_back(check_le("closure_residual", orbit.closure_residual, s.analysis.closure_tol));
  rep.checks.push_back(check_le("time_symmetry_residual", orbit.time_symmetry_residual,
                                s.analysis.symmetry_tol));
  return orbit.trajectory;
}

std::optional<HybridTrajectory> task_poincare(const Scenario& s, const Built& b, RunReport& rep) {
  const StateVector x0 = initial(s);
  const Eigen::Index n = x0.size() / 2;
  std::optional<HybridTrajectory> traj;
  ReturnMapOptions ro;
  ro.t_max = s.numerics.t_max;
  ro.min_impacts = b.spec.guard ? 1 : 0;
  int beta = static_cast<int>(x0.size()) - 1;
  if (b.spec.guard) {
    traj = task_periodic_orbit(s, b, rep);
    beta = reset_rank(b.spec, traj->impacts.front().pre_state);
    rep.reset_rank = beta;
  } else {
    traj = run_hybrid(b.spec, x0, 0.0, s.numerics.t_max, s.numerics.tol);
    record_trajectory(rep, *traj);
  }
  const int r = fixed_point_manifold(b.symmetry, x0.head(n)).dimension;
  rep.fix_dimension = r;

  // SLIP-type models: the section {phi = 0}, which contains Fix(Phi).
  const PoincareSection section =
      s.model == ModelKind::pendulum
          ? section_orthogonal_to_flow(b.spec.vector_field, x0)
          : coordinate_section(x0, 1, x0[3] >= 0.0 ? GuardDirection::rising
                                                   : GuardDirection::falling);
  const Mat J = return_map_jacobian(b.spec, section, s.numerics.fd_step, ro);
  StabilityReport st = analyze_stability(J, s.analysis.tol0, s.analysis.tol1, r);
  const SpectralBounds bounds =
      check_spectral_bounds(st, r, beta, static_cast<int>(section.dimension()));
  rep.checks.push_back(check_ge("lambda0_lower_bound", st.lambda0_count, bounds.lambda0_required));
  rep.checks.push_back(check_ge("lambda1_lower_bound", st.lambda1_count, bounds.lambda1_required));
  double worst = 0.0;
  for (double e : st.eigenvalue_residuals) worst = std::max(worst, e);
  rep.checks.push_back(
      check_le("eigenvalue_residual", worst, 1e-8 * std::max(1.0, J.lpNorm<Eigen::Infinity>())));
  rep.stability = std::move(st);
  return traj;
}

std::optional<HybridTrajectory> task_zero_dynamics(const Scenario& s, const Built& b,
                                                   RunReport& rep) {
  if (!b.controlled) throw InputError("task: zero_dynamics needs model controlled_slip");
  const ControlledSlipModel& m = *b.controlled;
  rep.checks.push_back(check_le("u_star_even", u_star_evenness(m, 100, s.analysis.rng_seed), 1e-12));
  const InvarianceResult inv =
      hybrid_invariance_check(m.manifold, m.closed_loop.guard, m.closed_loop.reset);
  rep.checks.push_back(check_le("hybrid_invariance", inv.worst_residual, 1e-9));
  if (!inv.invariant) return std::nullopt;

  const ZeroDynamicsOrbit zo = periodic_orbit_on_Z(m.plant, m.manifold, m.feedback, m.closed_loop,
                                                   m.symmetry, initial(s), s.numerics.t_max,
                                                   orbit_options(s));
  rep.orbit = OrbitSummary{zo.orbit.seed, zo.orbit.half_period, zo.orbit.closure_residual,
                           zo.orbit.time_symmetry_residual};
  record_trajectory(rep, zo.orbit.trajectory);
  rep.checks.push_back(check_le("gamma_compatibility", zo.gamma_residual, 1e-9));
  rep.checks.push_back(check_le("manifold_residual", zo.manifold_residual, 1e-6));
  rep.checks.push_back(
      check_le("closure_residual", zo.orbit.closure_residual, s.analysis.closure_tol));
  rep.checks.push_back(check_le("time_symmetry_residual", zo.orbit.time_symmetry_residual,
                                s.analysis.symmetry_tol));
  return zo.orbit.trajectory;
}

std::optional<HybridTrajectory> task_check_suite(const Scenario& s, const Built& b,
                                                 RunReport& rep) {
  std::mt19937_64 rng(s.analysis.rng_seed);
  const bool pend = s.model == ModelKind::pendulum;
  std::vector<std::uniform_real_distribution<double>> box;
  if (pend) {
    box = {std::uniform_real_distribution<double>(0.5, 2.0),
           std::uniform_real_distribution<double>(-2.0, 2.0)};
  } else {
    box = {std::uniform_real_distribution<double>(0.5, 1.5),
           std::uniform_real_distribution<double>(-1.0, 1.0),
           std::uniform_real_distribution<double>(-3.0, 3.0),
           std::uniform_real_distribution<double>(-3.0, 3.0)};
  }
  const VectorField engine = routh_vector_field(*b.routhian);
  double inv = 0.0, rev = 0.0, rsym = 0.0, cross = 0.0;
  for (int k = 0; k < s.analysis.samples; ++k) {
    StateVector x(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) x[static_cast<Eigen::Index>(i)] = box[i](rng);
    inv = std::max(inv, involution_residual(b.symmetry, x));
    rev = std::max(rev, reversibility_residual(b.symmetry, b.spec.vector_field, x));
    const Eigen::Index n = x.size() / 2;
    const StateVector y = b.symmetry.apply(x);
    rsym = std::max(rsym, std::abs(routhian_eval(*b.routhian, y.head(n), y.tail(n)) -
                                   routhian_eval(*b.routhian, x.head(n), x.tail(n))));
    cross = std::max(cross, (engine(x) - b.analytic(x)).lpNorm<Eigen::Infinity>());
  }
  rep.checks.push_back(check_le("involution_residual", inv, 1e-10));
  rep.checks.push_back(check_le("reversibility_residual", rev, 1e-8));
  rep.checks.push_back(check_le("routhian_symmetry", rsym, 1e-12));
  rep.checks.push_back(check_le("engine_vs_analytic_field", cross, 1e-6));

  if (b.controlled) {
    const ControlledSlipModel& m = *b.controlled;
    rep.checks.push_back(
        check_le("u_star_even", u_star_evenness(m, 100, s.analysis.rng_seed), 1e-12));
    const InvarianceResult hi =
        hybrid_invariance_check(m.manifold, m.closed_loop.guard, m.closed_loop.reset);
    rep.checks.push_back(check_le("hybrid_invariance", hi.worst_residual, 1e-9));
  }
  if (s.initial_state.empty()) return std::nullopt;
  return task_simulate(s, b, rep);
}

}  // namespace

RunReport run(const Scenario& s, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.scenario = s;
  const Built b = build(s);

  std::optional<HybridTrajectory> traj;
  switch (s.task) {
    case TaskKind::simulate: traj = task_simulate(s, b, rep); break;
    case TaskKind::periodic_orbit: traj = task_periodic_orbit(s, b, rep); break;
    case TaskKind::poincare: traj = task_poincare(s, b, rep); break;
    case TaskKind::zero_dynamics: traj = task_zero_dynamics(s, b, rep); break;
    case TaskKind::check_suite: traj = task_check_suite(s, b, rep); break;
  }
  rep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto write = [&](const std::string& field, const std::string& rel,
                         const std::function<void(std::ostream&)>& body) {
    const std::filesystem::path path = out_dir / rel;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError(field + ": cannot write " + path.string());
    body(os);
    if (!os) throw InputError(field + ": write failed for " + path.string());
  };
  write("outputs.trajectory", s.outputs.trajectory, [&](std::ostream& os) {
    if (traj) {
      write_trajectory_csv(os, *traj, state_names(s), s.outputs.stride);
    } else {
      write_trajectory_csv(os, HybridTrajectory{}, state_names(s), s.outputs.stride);
    }
  });
  write("outputs.report", s.outputs.report,
        [&](std::ostream& os) { os << dump_json(to_json(rep)); });
  return rep;
}

}  // namespace hybrid_routh
