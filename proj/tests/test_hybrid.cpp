#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "support.hpp"

using namespace hybrid_routh;
using support::state;

TEST_CASE("linear flow hits x = 1 at t = 1") {
  const auto spec = support::unit_flow();
  const SegmentResult r = integrate_segment(spec, state({0.0, 1.0}), 0.0, 5.0);
  REQUIRE(r.impact);
  CHECK(r.impact->time == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.impact->pre_state[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.impact->guard_residual <= spec.event_tolerance);
}

TEST_CASE("harmonic oscillator does not reach x = 0 before t = 1") {
  HybridSystemSpec spec;
  spec.vector_field = [](const Vec& s) { return state({s[1], -s[0]}); };
  spec.guard = [](const Vec& s) { return s[0]; };
  spec.guard_direction = GuardDirection::both;
  const SegmentResult r = integrate_segment(spec, state({1.0, 0.0}), 0.0, 1.0);
  CHECK_FALSE(r.impact);
  CHECK(r.segment.times.back() == 1.0);
  CHECK(r.segment.states.back()[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-9));

  const SegmentResult r2 = integrate_segment(spec, state({1.0, 0.0}), 0.0, 2.0);
  REQUIRE(r2.impact);
  CHECK(r2.impact->time == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
}

TEST_CASE("SLIP stance event matches a fine fixed-step oracle") {
  SlipParams p;
  const SlipModel m = slip_system(p);
  const Vec start = state({0.85, 0.1, 0.4, 0.8});
  const SegmentResult r = integrate_segment(m.spec, start, 0.0, 5.0);
  REQUIRE(r.impact);
  CHECK(std::abs(r.impact->pre_state[0] - p.l0) <= m.spec.event_tolerance);
  const double t_ref = oracle::slip_crossing_time(p.m, p.g, p.kappa, p.l0, start, 1e-4, 5.0);
  CHECK(r.impact->time == doctest::Approx(t_ref).epsilon(1e-8));
}

TEST_CASE("SLIP resets") {
  SlipParams p;
  const Vec pre = state({p.l0, 0.3, 0.5, 1.2});
  const Vec sym = slip_system(p).spec.reset(pre);
  CHECK((sym - state({p.l0, -0.3, -0.5, 1.2})).norm() == 0.0);

  p.phi0 = 0.25;
  const Vec fixed = slip_system(p, SlipReset::fixed_touchdown).spec.reset(pre);
  CHECK((fixed - state({p.l0, -0.25, -0.5, 1.2})).norm() == 0.0);
}

TEST_CASE("velocity-flipping reset on the guard is admissible") {
  const auto spec = support::unit_flow([](const Vec& s) { return state({s[0], -s[1]}); });
  ImpactEvent ev;
  ev.time = 1.0;
  ev.pre_state = state({1.0, 1.0});
  const Vec post = apply_reset(spec, ev);
  CHECK(post[1] == -1.0);
  CHECK(guard_rate(spec, post) < 0.0);
}

TEST_CASE("reset with outward velocity is rejected") {
  const auto spec = support::unit_flow([](const Vec& s) { return state({s[0], 2.0 * s[1]}); });
  CHECK_THROWS_AS(run_hybrid(spec, state({0.0, 1.0}), 0.0, 3.0), AdmissibilityError);
}

TEST_CASE("reset to the triggering side is rejected") {
  const auto spec = support::unit_flow([](const Vec& s) { return state({2.0, s[1]}); });
  CHECK_THROWS_AS(run_hybrid(spec, state({0.0, 1.0}), 0.0, 3.0), AdmissibilityError);
}

TEST_CASE("sawtooth impacts") {
  const auto spec = support::sawtooth();
  const HybridTrajectory traj = run_hybrid(spec, state({0.0, 1.0}), 0.0, 3.5);
  REQUIRE(traj.impacts.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(traj.impacts[i].time == doctest::Approx(i + 1.0));
  CHECK(traj.segments.size() == 4);
  CHECK(traj.final_state()[0] == doctest::Approx(0.5));
  CHECK(traj.state_at(2.0)[0] == doctest::Approx(0.0));  // right-continuous
  CHECK(traj.state_at(1.5)[0] == doctest::Approx(0.5));
}

TEST_CASE("trajectory invariants") {
  SlipParams p;
  const SlipModel m = slip_system(p);
  const HybridTrajectory traj = run_hybrid(m.spec, state({0.9, 0.0, 0.0, 1.0}), 0.0, 6.0);
  REQUIRE(traj.impacts.size() >= 4);
  for (std::size_t i = 0; i < traj.impacts.size(); ++i) {
    const auto& ev = traj.impacts[i];
    CHECK(std::abs(m.spec.guard(ev.pre_state)) <= m.spec.event_tolerance);
    CHECK(ev.guard_residual <= m.spec.event_tolerance);
    CHECK((traj.segments[i + 1].states.front() - ev.post_state).norm() == 0.0);
    CHECK(traj.segments[i + 1].times.front() == ev.time);
    if (i > 0) CHECK(ev.time - traj.impacts[i - 1].time >= m.spec.min_inter_impact);
  }

  const HybridTrajectory again = run_hybrid(m.spec, state({0.9, 0.0, 0.0, 1.0}), 0.0, 6.0);
  REQUIRE(again.impacts.size() == traj.impacts.size());
  for (std::size_t i = 0; i < traj.impacts.size(); ++i)
    CHECK(again.impacts[i].time == traj.impacts[i].time);
}

TEST_CASE("identity reset is a Zeno suspicion") {
  const auto spec = support::unit_flow([](const Vec& s) { return s; });
  CHECK_THROWS_AS(run_hybrid(spec, state({0.0, 1.0}), 0.0, 3.0), ZenoError);
}

TEST_CASE("impacts closer than the minimum dwell time") {
  const auto spec = support::unit_flow([](const Vec& s) { return state({1.0 - 1e-7, s[1]}); });
  CHECK_THROWS_AS(run_hybrid(spec, state({0.0, 1.0}), 0.0, 3.0), ZenoError);
}

TEST_CASE("impact budget") {
  auto spec = support::sawtooth();
  spec.max_impacts = 2;
  CHECK_THROWS_AS(run_hybrid(spec, state({0.0, 1.0}), 0.0, 3.5), ZenoError);
}

TEST_CASE("tangential crossing is reported") {
  HybridSystemSpec spec = support::unit_flow();
  spec.guard = [](const Vec& s) { return std::pow(s[0] - 1.0, 3); };
  // Cubic contact: the rate at the located root scales like tolerance^(2/3).
  spec.event_tolerance = 1e-14;
  CHECK_THROWS_AS(integrate_segment(spec, state({0.0, 1.0}), 0.0, 3.0), TangentialCrossing);
}

TEST_CASE("start on the guard moving into it") {
  const auto spec = support::sawtooth();
  CHECK_THROWS_AS(integrate_segment(spec, state({1.0, 1.0}), 0.0, 3.0), PreconditionError);
  // Leaving the guard is fine.
  CHECK_NOTHROW(integrate_segment(spec, state({1.0, -1.0}), 0.0, 0.5));
}

TEST_CASE("falling guards") {
  HybridSystemSpec spec;
  spec.vector_field = [](const Vec& s) { return state({s[1], -s[0]}); };
  spec.guard = [](const Vec& s) { return s[0]; };
  spec.guard_direction = GuardDirection::rising;
  // x = cos t first falls through 0 at pi/2, then rises at 3 pi/2.
  const SegmentResult r = integrate_segment(spec, state({1.0, 0.0}), 0.0, 6.0);
  REQUIRE(r.impact);
  CHECK(r.impact->time == doctest::Approx(1.5 * std::numbers::pi).epsilon(1e-9));
}
