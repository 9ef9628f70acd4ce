#pragma once

#include <functional>

#include "hybrid_routh/hybrid.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// Time-reversal symmetry induced by an involution F of shape space:
/// Phi(q, qdot) = (F(q), -dF(q) qdot).
struct ReversalSymmetry {
  std::function<Vec(const Vec&)> F;
  std::function<Mat(const Vec&)> dF;        // optional; finite differences otherwise
  std::function<Mat(const Vec&)> tangent;   // optional full dPhi(s)

  Vec apply(const StateVector& s) const;
  Mat jacobian_F(const Vec& q) const;
  /// dPhi(s) = [[dF, 0], [-d(dF qdot)/dq, -dF]].
  Mat tangent_map(const StateVector& s) const;
};

/// ||Phi(Phi(s)) - s||_inf.
double involution_residual(const ReversalSymmetry& sym, const StateVector& s);

/// ||X(Phi(s)) + dPhi(s) X(s)||_inf; zero for a reversible field.
double reversibility_residual(const ReversalSymmetry& sym, const VectorField& field,
                              const StateVector& s);

bool is_fixed_point(const ReversalSymmetry& sym, const StateVector& s, double tol = 1e-10);

/// Local description of Fix(Phi) near a refined fixed point of F.
struct FixedPointManifold {
  Vec q;             // refined configuration with F(q) = q
  int dimension = 0; // r
  Mat basis;         // 2d x r orthonormal tangent basis in state coordinates
  int position_directions = 0;
  int velocity_directions = 0;
};

FixedPointManifold fixed_point_manifold(const ReversalSymmetry& sym, const Vec& q_seed);

struct OrbitOptions {
  double tol = 1e-10;             // integrator tolerance
  double closure_tol = 1e-6;      // scaled by max(1, orbit amplitude)
  double fixed_point_tol = 1e-10;
  double reset_match_tol = 1e-9;  // |Delta(pre) - Phi(pre)| at the impact
  int symmetry_probes = 20;
};

struct PeriodicOrbit {
  StateVector seed;
  double half_period = 0.0;
  HybridTrajectory trajectory;  // one full period [0, 2 t_i]
  double closure_residual = 0.0;
  /// max_k ||Phi(gamma(t_k)) - gamma(-t_k)|| with gamma(-t) from backward
  /// integration of the seed.
  double time_symmetry_residual = 0.0;

  double period() const { return 2.0 * half_period; }
};

/// Builds the symmetric periodic orbit through a fixed point of Phi whose
/// impact map coincides with Phi: integrate to the first impact at t_i,
/// reset, and integrate a further t_i.
PeriodicOrbit construct_periodic_orbit(const HybridSystemSpec& spec, const ReversalSymmetry& sym,
                                       const StateVector& seed, double t_max,
                                       const OrbitOptions& opt = {});

/// Negated vector field, for integrating backwards in time with the forward
/// integrator.
VectorField reversed(const VectorField& field);

}  // namespace hybrid_routh
