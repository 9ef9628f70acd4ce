#include "hybrid_routh/control.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/QR>

#include "hybrid_routh/finite_difference.hpp"

namespace hybrid_routh {

ControlledRouthian::ControlledRouthian(RouthianSystem base, Mat input_matrix,
                                       std::vector<int> actuated_indices, VectorField drift)
    : base_(std::move(base)),
      C_(std::move(input_matrix)),
      actuated_(std::move(actuated_indices)),
      drift_(drift ? std::move(drift) : routh_vector_field(base_)) {
  const int n = base_.shape_dim();
  if (C_.rows() != 2 * n) throw InputError("input matrix must have one row per state");
  if (C_.cols() != static_cast<Eigen::Index>(actuated_.size()))
    throw InputError("input matrix needs one column per actuated coordinate");
  if (Eigen::ColPivHouseholderQR<Mat>(C_).rank() != C_.cols())
    throw InputError("input matrix must have full column rank");
  for (int i = 0; i < n; ++i) {
    if (C_.row(i).lpNorm<Eigen::Infinity>() != 0.0)
      throw InputError("inputs may not act on position rows");
    bool actuated = false;
    for (int a : actuated_) actuated |= (a == i);
    if (!actuated && C_.row(n + i).lpNorm<Eigen::Infinity>() != 0.0)
      throw InputError("unactuated velocity rows of the input matrix must be zero");
  }
}

VectorField ControlledRouthian::closed_loop(Feedback feedback) const {
  return [drift = drift_, C = C_, feedback = std::move(feedback)](const Vec& s) -> Vec {
    return drift(s) + C * feedback(s);
  };
}

double ZeroDynamicsManifold::slope(double phi) const {
  if (dh) return dh(phi);
  const double e = fd_step(phi);
  return (h(phi + e) - h(phi - e)) / (2.0 * e);
}

double ZeroDynamicsManifold::curvature(double phi) const {
  if (d2h) return d2h(phi);
  // Second difference with the fourth-root step.
  const double e = std::pow(std::numeric_limits<double>::epsilon(), 0.25) *
                   std::max(1.0, std::abs(phi));
  return (h(phi + e) - 2.0 * h(phi) + h(phi - e)) / (e * e);
}

StateVector ZeroDynamicsManifold::embed(double phi, double phidot) const {
  StateVector s = StateVector::Zero(4);
  s[actuated_index] = h(phi);
  s[unactuated_index] = phi;
  s[2 + actuated_index] = slope(phi) * phidot;
  s[2 + unactuated_index] = phidot;
  return s;
}

double ZeroDynamicsManifold::position_residual(const StateVector& s) const {
  return std::abs(s[actuated_index] - h(s[unactuated_index]));
}

double ZeroDynamicsManifold::velocity_residual(const StateVector& s) const {
  return std::abs(s[2 + actuated_index] - slope(s[unactuated_index]) * s[2 + unactuated_index]);
}

double ZeroDynamicsManifold::residual(const StateVector& s) const {
  return std::max(position_residual(s), velocity_residual(s));
}

double zero_dynamics_rhs(const ZeroDynamicsManifold& Z, double g, double phi, double phidot) {
  const double hv = Z.h(phi);
  if (!(hv > 0.0)) throw NumericalError("constraint h(phi) must be positive");
  return (g * std::sin(phi) - 2.0 * phidot * phidot * Z.slope(phi)) / hv;
}

double feedback_u_star(const ZeroDynamicsManifold& Z, const LegParams& p, double phi,
                       double phidot) {
  const double hv = Z.h(phi);
  if (!(hv > 0.0)) throw NumericalError("constraint h(phi) must be positive");
  const double h1 = Z.slope(phi);
  const double h2 = Z.curvature(phi);
  const double w2 = phidot * phidot;
  return h2 * w2 + h1 * p.g * std::sin(phi) / hv - 2.0 * w2 * h1 * h1 / hv - hv * w2 +
         p.g * std::cos(phi) + p.kappa * (hv - p.l0) / p.m;
}

Feedback u_star_feedback(const ZeroDynamicsManifold& Z, const LegParams& p) {
  return [Z, p](const StateVector& s) -> Vec {
    Vec u(1);
    u[0] = feedback_u_star(Z, p, s[Z.unactuated_index], s[2 + Z.unactuated_index]);
    return u;
  };
}

InputSymmetry InputSymmetry::identity() {
  auto id = [](const Vec& u) { return u; };
  return {id, id};
}

double gamma_compatibility(const ReversalSymmetry& sym, const Mat& C, const InputSymmetry& gamma,
                           const std::vector<std::pair<StateVector, Vec>>& samples) {
  double worst = 0.0;
  for (const auto& [s, u] : samples) {
    const Vec gu = gamma.map(u);
    if (gamma.inverse && (gamma.inverse(gu) - u).lpNorm<Eigen::Infinity>() >
                             1e-12 * std::max(1.0, u.lpNorm<Eigen::Infinity>()))
      throw PreconditionError("input symmetry is not invertible on the sampled inputs");
    const Vec r = C * gu + sym.tangent_map(s) * (C * u);
    worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

namespace {

double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

InvarianceResult hybrid_invariance_check(const ZeroDynamicsManifold& Z, const ScalarFunction& guard,
                                         const StateMap& reset, const InvarianceOptions& opt) {
  const auto g_of_phi = [&](double phi) { return guard(Z.embed(phi, 0.0)); };

  InvarianceResult out;
  constexpr int kGrid = 400;
  double prev_phi = -opt.phi_range, prev_g = g_of_phi(prev_phi);
  for (int i = 1; i <= kGrid; ++i) {
    const double phi = -opt.phi_range + 2.0 * opt.phi_range * i / kGrid;
    const double gv = g_of_phi(phi);
    if (prev_g == 0.0) {
      out.switching_phi.push_back(prev_phi);
    } else if ((prev_g < 0.0) != (gv < 0.0) && gv != 0.0) {
      out.switching_phi.push_back(bisect(g_of_phi, prev_phi, phi));
    }
    prev_phi = phi;
    prev_g = gv;
  }
  if (out.switching_phi.empty())
    throw PreconditionError("W is empty: the guard is unreachable on the zero-dynamics manifold");

  out.worst_residual = 0.0;
  for (double phi : out.switching_phi) {
    for (double w : opt.phidot_samples) {
      const StateVector pre = Z.embed(phi, w);
      const double r = Z.residual(reset(pre));
      if (r > out.worst_residual || out.witness.size() == 0) {
        out.worst_residual = std::max(out.worst_residual, r);
        out.witness = pre;
      }
    }
  }
  out.invariant = out.worst_residual <= opt.tol;
  return out;
}

double manifold_residual(const ZeroDynamicsManifold& Z, const HybridTrajectory& traj) {
  double worst = 0.0;
  for (const auto& seg : traj.segments) {
    for (const auto& s : seg.states) worst = std::max(worst, Z.residual(s));
    for (const auto& step : seg.dense.steps())
      worst = std::max(worst, Z.residual(step(step.t0 + 0.5 * step.h)));
  }
  return worst;
}

ZeroDynamicsOrbit periodic_orbit_on_Z(const ControlledRouthian& plant,
                                      const ZeroDynamicsManifold& Z, const Feedback& feedback,
                                      const HybridSystemSpec& closed_loop,
                                      const ReversalSymmetry& sym, const StateVector& seed,
                                      double t_max, const OrbitOptions& opt,
                                      const InputSymmetry& gamma) {
  if (Z.residual(seed) > 1e-12) throw PreconditionError("seed does not lie on Z");
  if (!is_fixed_point(sym, seed, opt.fixed_point_tol))
    throw PreconditionError("seed is not a fixed point of the reversal symmetry");

  const InvarianceResult inv = hybrid_invariance_check(Z, closed_loop.guard, closed_loop.reset);
  if (!inv.invariant) {
    std::ostringstream os;
    os << "Z is not hybrid invariant (worst image residual " << inv.worst_residual << ")";
    throw PreconditionError(os.str());
  }

  std::vector<std::pair<StateVector, Vec>> samples;
  const double w = seed[2 + Z.unactuated_index];
  for (double phi : {0.0, 0.1, -0.1, 0.3, -0.3}) {
    const StateVector s = Z.embed(phi, w);
    samples.emplace_back(s, feedback(s));
  }
  ZeroDynamicsOrbit out;
  out.gamma_residual = gamma_compatibility(sym, plant.input_matrix(), gamma, samples);
  if (out.gamma_residual > 1e-9) {
    std::ostringstream os;
    os << "input matrix is not compatible with the symmetry (residual " << out.gamma_residual
       << ")";
    throw PreconditionError(os.str());
  }

  out.orbit = construct_periodic_orbit(closed_loop, sym, seed, t_max, opt);
  out.manifold_residual = manifold_residual(Z, out.orbit.trajectory);
  if (out.manifold_residual > 1e-6) {
    std::ostringstream os;
    os << "closed loop left the zero-dynamics manifold (residual " << out.manifold_residual
       << ")";
    throw ManifoldEscape(os.str());
  }
  return out;
}

}  // namespace hybrid_routh
