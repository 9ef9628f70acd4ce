// fixture-search: scripted parameter search for the regression fixtures.
//
// SLIP: m = 1, I = 1, g = 9.81, l0 = 1; scan kappa (outer), xi*, phidot*
// (inner) and keep the first seed (xi*, 0, 0, phidot*) whose stance flow
// reaches xi = l0 within t = 5, transversally and with |phi-| < pi/2.
// Controlled SLIP: same kappa and phidot*, scan c0, c2, l0 with
// c0 < l0 < c0 + c2 (pi/2)^2 and keep the first constraint whose closed
// loop reaches the guard within t = 5 with a hybrid invariant Z.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

#include "hybrid_routh/scenario.hpp"

using namespace hybrid_routh;

namespace {

constexpr double kHorizon = 5.0;

struct SlipFixture {
  double kappa, xi, phidot, t_impact, phi_minus;
};

struct ControlledFixture {
  double c0, c2, l0, t_impact;
};

std::optional<SlipFixture> search_slip() {
  for (int ik = 1; ik <= 10; ++ik) {
    for (int ix = 0; ix <= 9; ++ix) {
      for (int iw = 0; iw <= 12; ++iw) {
        SlipParams p;
        p.kappa = 50.0 * ik;
        const double xi = 0.80 + 0.02 * ix, w = 0.25 * iw;
        const SlipModel m = slip_system(p);
        Vec seed(4);
        seed << xi, 0.0, 0.0, w;
        try {
          const SegmentResult r = integrate_segment(m.spec, seed, 0.0, kHorizon);
          if (!r.impact) continue;
          const double phi = r.impact->pre_state[1];
          if (!(std::abs(phi) < std::numbers::pi / 2)) continue;
          return SlipFixture{p.kappa, xi, w, r.impact->time, phi};
        } catch (const Error&) {
          continue;
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<ControlledFixture> search_controlled(const SlipFixture& slip) {
  const double span = std::numbers::pi * std::numbers::pi / 4.0;
  for (int i0 = 0; i0 <= 3; ++i0) {
    for (int i2 = 1; i2 <= 6; ++i2) {
      for (int il = 0; il <= 3; ++il) {
        ControlledSlipParams p;
        p.c0 = 0.80 + 0.05 * i0;
        p.c2 = 0.05 * i2;
        p.slip.l0 = 0.85 + 0.05 * il;
        p.slip.kappa = slip.kappa;
        if (!(p.c0 < p.slip.l0 && p.slip.l0 < p.c0 + p.c2 * span)) continue;
        try {
          const ControlledSlipModel m = controlled_slip_system(p);
          if (!hybrid_invariance_check(m.manifold, m.closed_loop.guard, m.closed_loop.reset)
                   .invariant)
            continue;
          const SegmentResult r =
              integrate_segment(m.closed_loop, m.seed(slip.phidot), 0.0, kHorizon);
          if (!r.impact) continue;
          return ControlledFixture{p.c0, p.c2, p.slip.l0, r.impact->time};
        } catch (const Error&) {
          continue;
        }
      }
    }
  }
  return std::nullopt;
}

void write(const std::filesystem::path& dir, const std::string& name, const Scenario& s) {
  const auto path = dir / name;
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os << dump_json(to_json(s));
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search for the SLIP and controlled-SLIP regression fixtures"};
  std::string out = "scenarios";
  app.add_option("--out-dir", out, "Directory receiving the scenario files");
  CLI11_PARSE(app, argc, argv);

  const auto slip = search_slip();
  if (!slip) {
    std::cerr << "fixture-search: no SLIP tuple reaches the guard\n";
    return 1;
  }
  std::cout.precision(17);
  std::cout << "slip: kappa = " << slip->kappa << ", xi* = " << slip->xi
            << ", phidot* = " << slip->phidot << ", t_i = " << slip->t_impact
            << ", phi- = " << slip->phi_minus << "\n";

  const auto ctrl = search_controlled(*slip);
  if (!ctrl) {
    std::cerr << "fixture-search: no admissible constraint found\n";
    return 1;
  }
  std::cout << "controlled: c0 = " << ctrl->c0 << ", c2 = " << ctrl->c2 << ", l0 = " << ctrl->l0
            << ", t_i = " << ctrl->t_impact << "\n";

  std::filesystem::create_directories(out);

  Scenario s;
  s.model = ModelKind::slip;
  s.slip.slip.kappa = slip->kappa;
  s.initial_state = {slip->xi, 0.0, 0.0, slip->phidot};
  s.numerics.t_max = kHorizon;

  s.description = "Certified symmetric SLIP orbit";
  s.task = TaskKind::periodic_orbit;
  s.outputs = {"slip_orbit.csv", "slip_orbit_report.json", 1};
  write(out, "slip_periodic_orbit.json", s);

  s.description = "Return-map spectrum of the certified SLIP orbit";
  s.task = TaskKind::poincare;
  s.outputs = {"slip_poincare.csv", "slip_poincare_report.json", 1};
  write(out, "slip_poincare.json", s);

  s.description = "SLIP symmetry and reversibility residuals";
  s.task = TaskKind::check_suite;
  s.outputs = {"slip_checks.csv", "slip_checks_report.json", 1};
  write(out, "slip_check_suite.json", s);

  Scenario c;
  c.description = "Zero-dynamics orbit of the controlled SLIP";
  c.model = ModelKind::controlled_slip;
  c.task = TaskKind::zero_dynamics;
  c.slip.slip.kappa = slip->kappa;
  c.slip.slip.l0 = ctrl->l0;
  c.slip.c0 = ctrl->c0;
  c.slip.c2 = ctrl->c2;
  c.initial_state = {ctrl->c0, 0.0, 0.0, slip->phidot};
  c.numerics.t_max = kHorizon;
  c.outputs = {"zero_dynamics.csv", "zero_dynamics_report.json", 1};
  write(out, "controlled_slip_zero_dynamics.json", c);
  return 0;
}
