#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hybrid_routh/hybrid.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// Lagrangian L = 1/2 xdot' M(x) xdot + 1/2 J(x) thetadot^2 - V(x) on
/// shape x times one cyclic angle theta.
///
/// theta is structurally absent: none of the maps take it as an argument.
/// Analytic derivative hooks are optional; when empty the Routh engine uses
/// central finite differences.
struct MechanicalSystem {
  int shape_dim = 0;
  std::function<Mat(const Vec&)> mass_shape;        // M_xx(x), symmetric positive definite
  std::function<double(const Vec&)> inertia_cyclic;  // M_thth(x) > 0
  std::function<double(const Vec&)> potential;       // V(x)
  std::vector<std::string> names;                    // shape coordinate labels
  std::string cyclic_name = "theta";
  Vec reference_point;  // a point of the admissible domain, used for validation

  // Velocity coupling M_xth(x). Only the block-diagonal case is supported;
  // a nonzero coupling is rejected when the Routhian is built.
  std::function<Vec(const Vec&)> mass_coupling;

  std::function<Vec(const Vec&)> potential_gradient;
  std::function<Vec(const Vec&)> inertia_cyclic_gradient;
  std::function<std::vector<Mat>(const Vec&)> mass_shape_gradient;  // dM/dx_k, k = 0..n-2
};

/// Below this cyclic inertia the reduction is declared singular.
inline constexpr double kSingularInertia = 1e-9;

class RouthianSystem {
 public:
  RouthianSystem(MechanicalSystem base, double mu);

  const MechanicalSystem& base() const { return base_; }
  double mu() const { return mu_; }
  int shape_dim() const { return base_.shape_dim; }

  /// V(x) + mu^2 / (2 M_thth(x)).
  double effective_potential(const Vec& x) const;
  Vec effective_potential_gradient(const Vec& x) const;
  /// Checked M_thth(x); throws SingularInertia below kSingularInertia.
  double cyclic_inertia(const Vec& x) const;

  /// Same mechanical system at another momentum level.
  RouthianSystem with_momentum(double mu) const { return RouthianSystem(base_, mu); }

 private:
  MechanicalSystem base_;
  double mu_;
};

/// R(x, xdot) = 1/2 xdot' M xdot - V(x) - mu^2 / (2 M_thth(x)).
double routhian_eval(const RouthianSystem& sys, const Vec& x, const Vec& xdot);

/// Reduced energy 1/2 xdot' M xdot + V_eff(x) on a state (x, xdot).
double reduced_energy(const RouthianSystem& sys, const StateVector& s);

/// First-order Routh vector field on TP in Euler-Lagrange form.
VectorField routh_vector_field(const RouthianSystem& sys);

/// Generalized momentum conjugate to the cyclic angle.
double momentum(const MechanicalSystem& sys, const Vec& x, const Vec& xdot, double thetadot);

/// Cyclic angle velocity M_thth(x)^{-1} mu.
double cyclic_velocity(const RouthianSystem& sys, const Vec& x);

/// mu_{i+1} as a function of mu_i and the impact that separates the segments.
using MomentumRule = std::function<double(double mu, const ImpactEvent& impact)>;
/// theta^+ as a function of theta^-.
using CyclicJump = std::function<double(double theta_minus)>;

/// One momentum value per segment: mu_0 followed by the rule applied at
/// every impact.
std::vector<double> momentum_sequence(const MomentumRule& rule,
                                      const std::vector<ImpactEvent>& impacts, double mu0);

struct CyclicSeries {
  std::vector<double> times;
  std::vector<double> theta;
  std::vector<int> segment;  // segment index of each sample
};

/// Rebuilds theta(t) along a reduced trajectory: on segment i
/// theta(t) = theta(t_i) + int mu_i / M_thth(x(s)) ds. At impacts `jump`
/// is applied (continuity when empty). Samples match the trajectory's.
CyclicSeries reconstruct_cyclic(const RouthianSystem& sys, const HybridTrajectory& traj,
                                double theta0, const std::vector<double>& mus,
                                const CyclicJump& jump = {}, double tol = 1e-10);

}  // namespace hybrid_routh
