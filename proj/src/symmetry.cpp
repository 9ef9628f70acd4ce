#include "hybrid_routh/symmetry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "hybrid_routh/finite_difference.hpp"

namespace hybrid_routh {

namespace {

Mat null_space(const Mat& A, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  const double cut = rel_tol * std::max(1.0, sv.size() ? sv[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++rank;
  return svd.matrixV().rightCols(A.cols() - rank);
}

}  // namespace

Vec ReversalSymmetry::apply(const StateVector& s) const {
  const Vec q = positions(s), v = velocities(s);
  return join_state(F(q), -jacobian_F(q) * v);
}

Mat ReversalSymmetry::jacobian_F(const Vec& q) const {
  if (dF) return dF(q);
  return fd_jacobian<double>(F, q);
}

Mat ReversalSymmetry::tangent_map(const StateVector& s) const {
  if (tangent) return tangent(s);
  const Eigen::Index n = s.size() / 2;
  const Vec q = s.head(n), v = s.tail(n);
  const Mat J = jacobian_F(q);
  Mat out = Mat::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = J;
  out.bottomRightCorner(n, n) = -J;
  out.bottomLeftCorner(n, n) =
      -fd_jacobian<double>([this, &v](const Vec& x) -> Vec { return jacobian_F(x) * v; }, q);
  return out;
}

double involution_residual(const ReversalSymmetry& sym, const StateVector& s) {
  return (sym.apply(sym.apply(s)) - s).lpNorm<Eigen::Infinity>();
}

double reversibility_residual(const ReversalSymmetry& sym, const VectorField& field,
                              const StateVector& s) {
  return (field(sym.apply(s)) + sym.tangent_map(s) * field(s)).lpNorm<Eigen::Infinity>();
}

bool is_fixed_point(const ReversalSymmetry& sym, const StateVector& s, double tol) {
  return (sym.apply(s) - s).lpNorm<Eigen::Infinity>() <= tol;
}

FixedPointManifold fixed_point_manifold(const ReversalSymmetry& sym, const Vec& q_seed) {
  const Eigen::Index n = q_seed.size();
  const Mat I = Mat::Identity(n, n);

  // Minimum-norm Newton on F(q) - q: (dF - I) is singular along Fix(F).
  Vec q = q_seed;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const Vec r = sym.F(q) - q;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-13 * std::max(1.0, q.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
    q -= (sym.jacobian_F(q) - I).completeOrthogonalDecomposition().solve(r);
  }
  if (!converged) throw NumericalError("Newton iteration for F(q) = q did not converge");

  const Mat J = sym.jacobian_F(q);
  Eigen::EigenSolver<Mat> es(J, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = es.eigenvalues()[i];
    if (std::abs(lam - 1.0) > 0.1 && std::abs(lam + 1.0) > 0.1) {
      std::ostringstream os;
      os << "dF has eigenvalue " << lam << " that is neither +1 nor -1";
      throw NumericalError(os.str());
    }
  }

  // Fixed positions: ker(dF - I). Fixed velocities (-dF v = v): ker(dF + I).
  const Mat pos = null_space(J - I);
  const Mat vel = null_space(J + I);

  FixedPointManifold out;
  out.q = q;
  out.position_directions = static_cast<int>(pos.cols());
  out.velocity_directions = static_cast<int>(vel.cols());
  out.dimension = out.position_directions + out.velocity_directions;
  out.basis = Mat::Zero(2 * n, out.dimension);
  out.basis.topLeftCorner(n, pos.cols()) = pos;
  out.basis.bottomRightCorner(n, vel.cols()) = vel;
  return out;
}

VectorField reversed(const VectorField& field) {
  return [field](const Vec& s) -> Vec { return -field(s); };
}

PeriodicOrbit construct_periodic_orbit(const HybridSystemSpec& spec, const ReversalSymmetry& sym,
                                       const StateVector& seed, double t_max,
                                       const OrbitOptions& opt) {
  if (!is_fixed_point(sym, seed, opt.fixed_point_tol))
    throw PreconditionError("seed is not a fixed point of the reversal symmetry");
  if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");

  SegmentResult first = integrate_segment(spec, seed, 0.0, t_max, opt.tol);
  if (!first.impact) first = integrate_segment(spec, seed, 0.0, 1.1 * t_max, opt.tol);
  if (!first.impact) {
    std::ostringstream os;
    os << "no impact within t_max = " << t_max << " (time to impact is infinite)";
    throw NoImpactError(os.str());
  }
  const ImpactEvent& hit = *first.impact;
  const double mismatch =
      (spec.reset(hit.pre_state) - sym.apply(hit.pre_state)).lpNorm<Eigen::Infinity>();
  if (mismatch > opt.reset_match_tol) {
    std::ostringstream os;
    os << "reset does not coincide with the symmetry at the impact (mismatch " << mismatch
       << ")";
    throw PreconditionError(os.str());
  }

  PeriodicOrbit orbit;
  orbit.seed = seed;
  orbit.half_period = hit.time;
  orbit.trajectory = run_hybrid(spec, seed, 0.0, 2.0 * hit.time, opt.tol);
  if (orbit.trajectory.impacts.size() != 1)
    throw NumericalError("expected exactly one impact per period, found " +
                         std::to_string(orbit.trajectory.impacts.size()));

  orbit.closure_residual = (orbit.trajectory.final_state() - seed).norm();
  double amplitude = 1.0;
  for (const auto& seg : orbit.trajectory.segments)
    for (const auto& s : seg.states) amplitude = std::max(amplitude, s.lpNorm<Eigen::Infinity>());
  if (orbit.closure_residual > opt.closure_tol * amplitude) {
    std::ostringstream os;
    os << "orbit closure residual " << orbit.closure_residual << " exceeds tolerance "
       << opt.closure_tol * amplitude;
    throw ClosureError(os.str());
  }

  // Phi(gamma(t)) = gamma(-t): gamma(-t) from the negated field, started at the seed.
  IntegratorOptions iopt;
  iopt.rtol = iopt.atol = opt.tol;
  const VectorField back = reversed(spec.vector_field);
  const auto backward = integrate_dense<double>(
      [&back](double, const Vec& y) { return back(y); }, 0.0, seed, hit.time, iopt);
  const Segment& forward = orbit.trajectory.segments.front();
  double worst = 0.0;
  const int probes = std::max(1, opt.symmetry_probes);
  for (int k = 1; k <= probes; ++k) {
    const double t = hit.time * k / probes;
    const Vec fwd = (k == probes) ? forward.states.back() : forward.state_at(t);
    const Vec bwd = (k == probes) ? backward.steps().back()(hit.time) : backward(t);
    worst = std::max(worst, (sym.apply(fwd) - bwd).norm());
  }
  orbit.time_symmetry_residual = worst;
  return orbit;
}

}  // namespace hybrid_routh
