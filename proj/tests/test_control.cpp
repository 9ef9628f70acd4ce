#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace hybrid_routh;
using support::state;

namespace {

ControlledSlipModel certified_controlled(Vec* seed = nullptr, double* t_max = nullptr) {
  const Scenario s = support::fixture("controlled_slip_zero_dynamics.json");
  if (seed) *seed = support::initial(s);
  if (t_max) *t_max = s.numerics.t_max;
  return controlled_slip_system(s.slip);
}

ZeroDynamicsManifold quadratic(double c0, double c2, double c3 = 0.0) {
  ZeroDynamicsManifold Z;
  Z.h = [=](double p) { return c0 + c2 * p * p + c3 * p * p * p; };
  Z.dh = [=](double p) { return 2.0 * c2 * p + 3.0 * c3 * p * p; };
  Z.d2h = [=](double p) { return 2.0 * c2 + 6.0 * c3 * p; };
  Z.even = c3 == 0.0;
  return Z;
}

// The law as printed, with h'' not multiplied by phidot^2.
double printed_u_star(const ZeroDynamicsManifold& Z, const LegParams& p, double phi,
                      double phidot) {
  const double h = Z.h(phi), h1 = Z.slope(phi), h2 = Z.curvature(phi), w2 = phidot * phidot;
  return h2 + h1 * p.g * std::sin(phi) / h - 2.0 * w2 / h * h1 * h1 - h * w2 +
         p.g * std::cos(phi) + p.kappa * (h - p.l0) / p.m;
}

double stance_drift(const ControlledSlipParams& cp, const Feedback& u, const Vec& seed,
                    const ZeroDynamicsManifold& Z) {
  const ControlledSlipModel m = controlled_slip_system(cp);
  HybridSystemSpec spec = m.closed_loop;
  spec.vector_field = m.plant.closed_loop(u);
  const SegmentResult r = integrate_segment(spec, seed, 0.0, 5.0);
  double worst = 0.0;
  for (const auto& s : r.segment.states) worst = std::max(worst, Z.residual(s));
  return worst;
}

}  // namespace

TEST_CASE("zero dynamics values") {
  const ZeroDynamicsManifold Z = quadratic(1.0, 0.1);
  for (double w : {0.0, 1.0, -2.5}) CHECK(zero_dynamics_rhs(Z, 9.81, 0.0, w) == 0.0);
  CHECK(zero_dynamics_rhs(Z, 9.81, 0.2, 1.0) ==
        doctest::Approx((9.81 * std::sin(0.2) - 2.0 * 0.04) / 1.004).epsilon(1e-14));
  const ZeroDynamicsManifold flat = quadratic(0.8, 0.0);
  CHECK(zero_dynamics_rhs(flat, 9.81, 0.3, 2.0) ==
        doctest::Approx(9.81 / 0.8 * std::sin(0.3)).epsilon(1e-14));
  CHECK_THROWS_AS(zero_dynamics_rhs(quadratic(-1.0, 0.1), 9.81, 0.1, 0.0), NumericalError);
}

TEST_CASE("u* at phi = 0") {
  const double c0 = 0.9, c2 = 0.2;
  const ZeroDynamicsManifold Z = quadratic(c0, c2);
  const LegParams p{1.0, 9.81, 100.0, 1.0};
  // phidot = 1: the curvature term enters with unit weight.
  CHECK(feedback_u_star(Z, p, 0.0, 1.0) ==
        doctest::Approx(2.0 * c2 - c0 + p.g + p.kappa * (c0 - p.l0) / p.m).epsilon(1e-14));
  // General phidot: 2 c2 phidot^2 - c0 phidot^2 + g + kappa (c0 - l0) / m.
  const double w = 1.7;
  CHECK(feedback_u_star(Z, p, 0.0, w) ==
        doctest::Approx(2.0 * c2 * w * w - c0 * w * w + p.g + p.kappa * (c0 - p.l0) / p.m)
            .epsilon(1e-14));
  CHECK_THROWS_AS(feedback_u_star(quadratic(-0.1, 0.0), p, 0.0, 1.0), NumericalError);
}

TEST_CASE("u* is even in phi") {
  const ZeroDynamicsManifold Z = quadratic(0.85, 0.12);
  const LegParams p{1.0, 9.81, 150.0, 0.95};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> phi(-1.2, 1.2), w(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double a = phi(rng), b = w(rng);
    CHECK(std::abs(feedback_u_star(Z, p, -a, b) - feedback_u_star(Z, p, a, b)) <= 1e-12);
  }
}

TEST_CASE("finite-difference constraint derivatives") {
  ZeroDynamicsManifold Z;
  Z.h = [](double p) { return 0.9 + 0.2 * p * p; };
  for (double p : {-0.7, 0.0, 0.4}) {
    CHECK(Z.slope(p) == doctest::Approx(0.4 * p).epsilon(1e-9));
    CHECK(Z.curvature(p) == doctest::Approx(0.4).epsilon(1e-6));
  }
}

TEST_CASE("closed loop stays on Z over one stance") {
  ControlledSlipParams cp;
  cp.c0 = 0.9;
  cp.c2 = 0.2;
  cp.slip.l0 = 1.0;
  const ControlledSlipModel m = controlled_slip_system(cp);
  const Vec seed = m.seed(1.0);
  CHECK(stance_drift(cp, m.feedback, seed, m.manifold) <= 1e-6);

  // The printed law leaves Z as soon as phidot^2 differs from one.
  const LegParams leg = leg_params(cp.slip);
  const Feedback printed = [&](const Vec& s) {
    return state({printed_u_star(m.manifold, leg, s[1], s[3])});
  };
  CHECK(stance_drift(cp, printed, seed, m.manifold) > 1e-3);
}

TEST_CASE("uniqueness of the invariance feedback") {
  const ControlledSlipModel m = controlled_slip_system({});
  const Vec s = m.manifold.embed(0.3, 1.2);
  // d/dt (xidot - h'(phi) phidot) along the closed loop.
  const auto constraint_rate = [&](const Feedback& u) {
    const Vec f = m.plant.closed_loop(u)(s);
    return f[2] - m.manifold.curvature(s[1]) * s[3] * f[1] - m.manifold.slope(s[1]) * f[3];
  };
  CHECK(std::abs(constraint_rate(m.feedback)) < 1e-12);
  const double delta = 0.05;
  const Feedback nudged = [&](const Vec& x) { return Vec(m.feedback(x).array() + delta); };
  CHECK(constraint_rate(nudged) == doctest::Approx(delta).epsilon(1e-10));
}

TEST_CASE("input symmetry compatibility") {
  const SlipModel slip = slip_system({});
  Mat C = Mat::Zero(4, 1);
  C(2, 0) = 1.0;
  std::vector<std::pair<Vec, Vec>> samples = {{state({0.9, 0.1, 0.2, 1.0}), state({0.7})},
                                              {state({1.1, -0.3, -0.5, 2.0}), state({-1.5})}};
  CHECK(gamma_compatibility(slip.symmetry, C, InputSymmetry::identity(), samples) == 0.0);

  const auto neg = [](const Vec& u) { return Vec(-u); };
  const InputSymmetry minus{neg, neg};
  CHECK(gamma_compatibility(slip.symmetry, C, minus, samples) == doctest::Approx(2.0 * 1.5));

  std::vector<std::pair<Vec, Vec>> zero = {{state({0.9, 0.1, 0.2, 1.0}), state({0.0})}};
  CHECK(gamma_compatibility(slip.symmetry, C, minus, zero) == 0.0);
}

TEST_CASE("hybrid invariance") {
  ControlledSlipParams cp;
  cp.c0 = 0.8;
  cp.c2 = 0.1;
  cp.slip.l0 = 0.9;
  const ControlledSlipModel m = controlled_slip_system(cp);
  const InvarianceResult r =
      hybrid_invariance_check(m.manifold, m.closed_loop.guard, m.closed_loop.reset);
  CHECK(r.invariant);
  CHECK(r.worst_residual <= 1e-9);
  REQUIRE(r.switching_phi.size() == 2);
  const double phi_w = std::sqrt((cp.slip.l0 - cp.c0) / cp.c2);
  CHECK(r.switching_phi[0] == doctest::Approx(-phi_w).epsilon(1e-12));
  CHECK(r.switching_phi[1] == doctest::Approx(phi_w).epsilon(1e-12));

  // Phi maps Z into itself for even h.
  for (double p : {-1.0, -0.3, 0.2, 0.9})
    for (double w : {-2.0, 0.5, 1.5})
      CHECK(m.manifold.residual(m.symmetry.apply(m.manifold.embed(p, w))) <= 1e-10);

  const ZeroDynamicsManifold odd = quadratic(cp.c0, cp.c2, 0.01);
  const InvarianceResult bad = hybrid_invariance_check(odd, m.closed_loop.guard, m.closed_loop.reset);
  CHECK_FALSE(bad.invariant);
  const double pw = bad.witness[1];
  CHECK(odd.position_residual(m.closed_loop.reset(bad.witness)) ==
        doctest::Approx(0.02 * std::abs(pw * pw * pw)).epsilon(1e-6));

  ControlledSlipParams high = cp;
  high.slip.l0 = cp.c0 + cp.c2 * 2.5 + 0.1;
  const ControlledSlipModel unreachable = controlled_slip_system(high);
  CHECK_THROWS_AS(hybrid_invariance_check(unreachable.manifold, unreachable.closed_loop.guard,
                                          unreachable.closed_loop.reset),
                  PreconditionError);
}

TEST_CASE("controlled plant validation") {
  const SlipModel slip = slip_system({});
  Mat C = Mat::Zero(4, 1);
  C(2, 0) = 1.0;
  CHECK_NOTHROW(ControlledRouthian(slip.routhian, C, {0}));
  CHECK_THROWS_AS(ControlledRouthian(slip.routhian, Mat::Zero(3, 1), {0}), InputError);
  CHECK_THROWS_AS(ControlledRouthian(slip.routhian, Mat::Zero(4, 1), {0}), InputError);
  Mat pos = C;
  pos(0, 0) = 1.0;
  CHECK_THROWS_AS(ControlledRouthian(slip.routhian, pos, {0}), InputError);
  Mat unact = C;
  unact(3, 0) = 1.0;
  CHECK_THROWS_AS(ControlledRouthian(slip.routhian, unact, {0}), InputError);

  // Without an explicit drift the generic Routh engine is used.
  const ControlledRouthian generic(slip.routhian, C, {0});
  const Vec s = state({0.9, 0.2, 0.1, 1.0});
  CHECK((generic.field(s, state({0.0})) - slip.field(s)).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(generic.field(s, state({0.3}))[2] - generic.field(s, state({0.0}))[2] ==
        doctest::Approx(0.3));
}

TEST_CASE("periodic orbit on the zero dynamics") {
  Vec seed;
  double t_max = 0.0;
  const ControlledSlipModel m = certified_controlled(&seed, &t_max);
  CHECK(m.manifold.residual(seed) == 0.0);
  CHECK(is_fixed_point(m.symmetry, seed));
  const ZeroDynamicsOrbit zo = periodic_orbit_on_Z(m.plant, m.manifold, m.feedback,
                                                   m.closed_loop, m.symmetry, seed, t_max);
  CHECK(zo.orbit.closure_residual <= 1e-6);
  CHECK(zo.manifold_residual <= 1e-6);
  CHECK(zo.gamma_residual == 0.0);
  CHECK(zo.orbit.period() == doctest::Approx(2.0 * zo.orbit.trajectory.impacts[0].time));

  // u*(Phi(gamma)) = u*(gamma) along the orbit; the closed loop is reversible on Z.
  double worst_u = 0.0, worst_rev = 0.0;
  for (const auto& seg : zo.orbit.trajectory.segments)
    for (const auto& s : seg.states) {
      worst_u = std::max(worst_u, std::abs(m.feedback(m.symmetry.apply(s))[0] - m.feedback(s)[0]));
      worst_rev = std::max(worst_rev, reversibility_residual(m.symmetry, m.closed_loop.vector_field, s));
      // The unactuated row is the open-loop Routh equation.
      CHECK(m.closed_loop.vector_field(s)[3] == m.plant.drift()(s)[3]);
    }
  CHECK(worst_u <= 1e-9);
  CHECK(worst_rev <= 1e-8);

  Vec off = seed;
  off[0] += 0.01;
  CHECK_THROWS_AS(periodic_orbit_on_Z(m.plant, m.manifold, m.feedback, m.closed_loop, m.symmetry,
                                      off, t_max),
                  PreconditionError);
}
