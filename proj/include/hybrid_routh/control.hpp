#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hybrid_routh/hybrid.hpp"
#include "hybrid_routh/routh.hpp"
#include "hybrid_routh/symmetry.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// State feedback u(s).
using Feedback = std::function<Vec(const StateVector&)>;

/// Routh system with a constant input matrix: gamma' = X(gamma) + C u.
///
/// Inputs act only on the velocity rows of the actuated shape coordinates;
/// the unactuated Routh equations are left untouched.
class ControlledRouthian {
 public:
  ControlledRouthian(RouthianSystem base, Mat input_matrix, std::vector<int> actuated_indices,
                     VectorField drift = {});

  const RouthianSystem& base() const { return base_; }
  const Mat& input_matrix() const { return C_; }
  const std::vector<int>& actuated_indices() const { return actuated_; }
  const VectorField& drift() const { return drift_; }

  Vec field(const StateVector& s, const Vec& u) const { return drift_(s) + C_ * u; }
  VectorField closed_loop(Feedback feedback) const;

 private:
  RouthianSystem base_;
  Mat C_;
  std::vector<int> actuated_;
  VectorField drift_;
};

/// Z = {x_a = h(x_u), xdot_a = h'(x_u) xdot_u} on a two-coordinate shape
/// space with actuated coordinate x_a and unactuated x_u.
struct ZeroDynamicsManifold {
  std::function<double(double)> h;
  std::function<double(double)> dh;   // optional, central differences otherwise
  std::function<double(double)> d2h;  // optional
  int actuated_index = 0;
  int unactuated_index = 1;
  bool even = false;

  double slope(double phi) const;
  double curvature(double phi) const;
  StateVector embed(double phi, double phidot) const;
  double position_residual(const StateVector& s) const;
  double velocity_residual(const StateVector& s) const;
  double residual(const StateVector& s) const;
};

/// Spring-leg constants entering the zero dynamics and the feedback law.
struct LegParams {
  double m = 1.0;
  double g = 9.81;
  double kappa = 100.0;
  double l0 = 1.0;
};

/// phi'' = (g sin phi - 2 phidot^2 h'(phi)) / h(phi), the dynamics on Z.
double zero_dynamics_rhs(const ZeroDynamicsManifold& Z, double g, double phi, double phidot);

/// The unique input keeping the spring-leg closed loop tangent to Z:
/// u* = h'' phidot^2 + h' g sin(phi) / h - 2 phidot^2 h'^2 / h - h phidot^2
///      + g cos(phi) + kappa (h - l0) / m.
double feedback_u_star(const ZeroDynamicsManifold& Z, const LegParams& p, double phi,
                       double phidot);

/// u* as state feedback (one input).
Feedback u_star_feedback(const ZeroDynamicsManifold& Z, const LegParams& p);

/// Input-space involution paired with Phi; identity by default.
struct InputSymmetry {
  std::function<Vec(const Vec&)> map;
  std::function<Vec(const Vec&)> inverse;
  static InputSymmetry identity();
};

/// max over samples of ||C Gamma(u) + dPhi(gamma) C u||_inf.
double gamma_compatibility(const ReversalSymmetry& sym, const Mat& C, const InputSymmetry& gamma,
                           const std::vector<std::pair<StateVector, Vec>>& samples);

struct InvarianceResult {
  bool invariant = false;
  double worst_residual = 0.0;
  StateVector witness;                // pre-impact point of W with the worst image
  std::vector<double> switching_phi;  // roots of guard(embed(phi, .)) = 0
};

struct InvarianceOptions {
  double tol = 1e-9;
  double phi_range = 1.5707963267948966;
  std::vector<double> phidot_samples = {-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
};

/// Checks Delta(W) subset Z with W = Z intersected with the guard zero set.
InvarianceResult hybrid_invariance_check(const ZeroDynamicsManifold& Z, const ScalarFunction& guard,
                                         const StateMap& reset, const InvarianceOptions& opt = {});

struct ZeroDynamicsOrbit {
  PeriodicOrbit orbit;
  double manifold_residual = 0.0;  // max |xi - h(phi)| and velocity residual along the orbit
  double gamma_residual = 0.0;
};

/// Symmetric periodic orbit of the closed loop, lying on Z.
ZeroDynamicsOrbit periodic_orbit_on_Z(const ControlledRouthian& plant,
                                      const ZeroDynamicsManifold& Z, const Feedback& feedback,
                                      const HybridSystemSpec& closed_loop,
                                      const ReversalSymmetry& sym, const StateVector& seed,
                                      double t_max, const OrbitOptions& opt = {},
                                      const InputSymmetry& gamma = InputSymmetry::identity());

/// Max of ZeroDynamicsManifold::residual over stored samples and dense
/// midpoints of a trajectory.
double manifold_residual(const ZeroDynamicsManifold& Z, const HybridTrajectory& traj);

}  // namespace hybrid_routh
