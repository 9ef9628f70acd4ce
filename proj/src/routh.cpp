#include "hybrid_routh/routh.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "hybrid_routh/finite_difference.hpp"

namespace hybrid_routh {

namespace {

std::vector<Mat> mass_gradient(const MechanicalSystem& sys, const Vec& x) {
  if (sys.mass_shape_gradient) return sys.mass_shape_gradient(x);
  std::vector<Mat> out;
  out.reserve(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k)
    out.push_back(fd_partial_matrix<double>(sys.mass_shape, x, k));
  return out;
}

}  // namespace

RouthianSystem::RouthianSystem(MechanicalSystem base, double mu)
    : base_(std::move(base)), mu_(mu) {
  if (base_.shape_dim <= 0) throw InputError("shape dimension must be positive");
  if (!base_.mass_shape || !base_.inertia_cyclic || !base_.potential)
    throw InputError("mechanical system needs mass, cyclic inertia and potential");
  if (!std::isfinite(mu_)) throw InputError("momentum must be finite");
  if (base_.reference_point.size() != base_.shape_dim)
    throw InputError("reference point has the wrong dimension");

  const Vec& x = base_.reference_point;
  const Mat M = base_.mass_shape(x);
  if (M.rows() != base_.shape_dim || M.cols() != base_.shape_dim)
    throw InputError("mass matrix has the wrong shape");
  if (!M.isApprox(M.transpose(), 1e-12)) throw InputError("mass matrix is not symmetric");
  if (Eigen::LLT<Mat>(M).info() != Eigen::Success)
    throw InputError("mass matrix is not positive definite at the reference point");
  if (!(base_.inertia_cyclic(x) > 0.0))
    throw InputError("cyclic inertia must be positive at the reference point");
  if (base_.mass_coupling && base_.mass_coupling(x).lpNorm<Eigen::Infinity>() != 0.0)
    throw InputError("velocity-coupled kinetic energy (M_xtheta != 0) is not supported");
}

double RouthianSystem::cyclic_inertia(const Vec& x) const {
  const double J = base_.inertia_cyclic(x);
  if (!(J >= kSingularInertia)) {
    std::ostringstream os;
    os << "singular cyclic inertia " << J << ": Routh reduction breaks down";
    throw SingularInertia(os.str());
  }
  return J;
}

double RouthianSystem::effective_potential(const Vec& x) const {
  return base_.potential(x) + mu_ * mu_ / (2.0 * cyclic_inertia(x));
}

Vec RouthianSystem::effective_potential_gradient(const Vec& x) const {
  const Vec dV = base_.potential_gradient ? base_.potential_gradient(x)
                                          : fd_gradient<double>(base_.potential, x);
  const double J = cyclic_inertia(x);
  const Vec dJ = base_.inertia_cyclic_gradient ? base_.inertia_cyclic_gradient(x)
                                               : fd_gradient<double>(base_.inertia_cyclic, x);
  return dV - (mu_ * mu_ / (2.0 * J * J)) * dJ;
}

double routhian_eval(const RouthianSystem& sys, const Vec& x, const Vec& xdot) {
  const Mat M = sys.base().mass_shape(x);
  return 0.5 * xdot.dot(M * xdot) - sys.effective_potential(x);
}

double reduced_energy(const RouthianSystem& sys, const StateVector& s) {
  const Vec x = positions(s), v = velocities(s);
  return 0.5 * v.dot(sys.base().mass_shape(x) * v) + sys.effective_potential(x);
}

VectorField routh_vector_field(const RouthianSystem& sys) {
  return [sys](const Vec& s) -> Vec {
    const Eigen::Index n = s.size() / 2;
    const Vec x = s.head(n), v = s.tail(n);
    const Mat M = sys.base().mass_shape(x);
    const std::vector<Mat> dM = mass_gradient(sys.base(), x);

    // M vdot = -dV_eff/dx + 1/2 [v' dM_i v]_i - (sum_k dM_k v_k) v
    Vec rhs = -sys.effective_potential_gradient(x);
    Mat Mdot = Mat::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      rhs[k] += 0.5 * v.dot(dM[k] * v);
      Mdot += dM[k] * v[k];
    }
    rhs -= Mdot * v;

    Eigen::LDLT<Mat> ldlt(M);
    if (ldlt.info() != Eigen::Success || !(ldlt.isPositive()) ||
        ldlt.vectorD().cwiseAbs().minCoeff() < 1e-14 * std::max(1.0, M.norm()))
      throw NumericalError("shape mass matrix is not invertible");
    Vec out(2 * n);
    out << v, ldlt.solve(rhs);
    return out;
  };
}

double momentum(const MechanicalSystem& sys, const Vec& x, const Vec& /*xdot*/,
                double thetadot) {
  return sys.inertia_cyclic(x) * thetadot;
}

double cyclic_velocity(const RouthianSystem& sys, const Vec& x) {
  return sys.mu() / sys.cyclic_inertia(x);
}

std::vector<double> momentum_sequence(const MomentumRule& rule,
                                      const std::vector<ImpactEvent>& impacts, double mu0) {
  std::vector<double> mus{mu0};
  for (const auto& ev : impacts) mus.push_back(rule ? rule(mus.back(), ev) : mus.back());
  return mus;
}

CyclicSeries reconstruct_cyclic(const RouthianSystem& sys, const HybridTrajectory& traj,
                                double theta0, const std::vector<double>& mus,
                                const CyclicJump& jump, double tol) {
  if (mus.size() < traj.segments.size()) {
    std::ostringstream os;
    os << "missing momentum for segment " << mus.size() << " (trajectory has "
       << traj.segments.size() << " segments)";
    throw PreconditionError(os.str());
  }
  CyclicSeries out;
  IntegratorOptions opt;
  opt.rtol = opt.atol = tol;

  double theta = theta0;
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    const Segment& seg = traj.segments[i];
    const double mu = mus[i];
    if (i > 0 && jump) theta = jump(theta);

    out.times.push_back(seg.times.front());
    out.theta.push_back(theta);
    out.segment.push_back(static_cast<int>(i));
    if (seg.times.size() < 2) continue;

    // dtheta/dt = mu / M_thth(x(t)), x(t) from the segment's dense output.
    DormandPrince<double> stepper(
        [&](double t, const Vec&) {
          Vec d(1);
          d[0] = mu / sys.cyclic_inertia(positions(seg.state_at(t)));
          return d;
        },
        opt);
    Vec y(1);
    y[0] = theta;
    stepper.reset(seg.times.front(), y);
    for (std::size_t k = 1; k < seg.times.size(); ++k) {
      if (seg.times[k] > stepper.t())
        while (stepper.t() < seg.times[k]) stepper.step(seg.times[k]);
      out.times.push_back(seg.times[k]);
      out.theta.push_back(stepper.y()[0]);
      out.segment.push_back(static_cast<int>(i));
    }
    theta = stepper.y()[0];
  }
  return out;
}

}  // namespace hybrid_routh
