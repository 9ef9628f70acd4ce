#pragma once

#include "hybrid_routh/control.hpp"
#include "hybrid_routh/hybrid.hpp"
#include "hybrid_routh/routh.hpp"
#include "hybrid_routh/symmetry.hpp"

namespace hybrid_routh {

// ---------------------------------------------------------------------------
// Spring-loaded pendulum: L = 1/2 m (rdot^2 + r^2 thdot^2) - 1/2 k r^2.

struct PendulumParams {
  double m = 1.0;
  double k = 1.0;
  double mu = 1.0;

  bool operator==(const PendulumParams&) const = default;
};

MechanicalSystem pendulum_system(const PendulumParams& p);
RouthianSystem pendulum_routhian(const PendulumParams& p);
/// rddot = mu^2 / (m^2 r^3) - (k / m) r.
Vec pendulum_field(const PendulumParams& p, const StateVector& s);
/// det of the full velocity Hessian diag(m, m r^2).
double pendulum_regularity(const PendulumParams& p, double r);
/// Time reversal with F = identity.
ReversalSymmetry pendulum_symmetry();

// ---------------------------------------------------------------------------
// Stance-phase SLIP obtained by reducing the one-leg hopper's attitude angle.
// State order (xi, phi, xidot, phidot).

struct SlipParams {
  double m = 1.0;
  double I = 1.0;
  double g = 9.81;
  double l0 = 1.0;
  double kappa = 100.0;
  double phi0 = 0.5;  // touchdown angle, used only by the fixed-touchdown reset
  double mu = 0.0;

  bool operator==(const SlipParams&) const = default;
};

enum class SlipReset {
  symmetric,       // Delta = Phi on the guard: (l0, -phi, -xidot, phidot)
  fixed_touchdown  // (l0, -phi0, -xidot, phidot) with phi0 a constant
};

struct SlipModel {
  SlipParams params;
  RouthianSystem routhian;
  VectorField field;  // analytic Routh equations
  HybridSystemSpec spec;
  ReversalSymmetry symmetry;
  MomentumRule momentum_rule;  // thetadot+ = -thetadot-  =>  mu -> -mu
  CyclicJump cyclic_jump;      // theta+ = -theta-
};

void validate(const SlipParams& p, SlipReset reset = SlipReset::symmetric);
MechanicalSystem slip_mechanical_system(const SlipParams& p);
Vec slip_field(const SlipParams& p, const StateVector& s);
SlipModel slip_system(const SlipParams& p, SlipReset reset = SlipReset::symmetric);
LegParams leg_params(const SlipParams& p);

// ---------------------------------------------------------------------------
// Controlled SLIP: the spring length is actuated, xi'' gains + u.

struct ControlledSlipParams {
  SlipParams slip;
  double c0 = 0.9;  // h(phi) = c0 + c2 phi^2
  double c2 = 0.1;

  bool operator==(const ControlledSlipParams&) const = default;
};

struct ControlledSlipModel {
  ControlledSlipParams params;
  ControlledRouthian plant;
  ZeroDynamicsManifold manifold;
  Feedback feedback;        // u*
  HybridSystemSpec closed_loop;
  ReversalSymmetry symmetry;

  /// gamma~* = (h(0), 0, -h'(0) phidot*, phidot*).
  StateVector seed(double phidot) const;
};

ControlledSlipModel controlled_slip_system(const ControlledSlipParams& p);

}  // namespace hybrid_routh
