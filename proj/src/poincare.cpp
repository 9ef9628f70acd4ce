#include "hybrid_routh/poincare.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "hybrid_routh/finite_difference.hpp"

namespace hybrid_routh {

PoincareSection section_orthogonal_to_flow(const VectorField& field, const StateVector& anchor) {
  const Vec f = field(anchor);
  const double nf = f.norm();
  if (!(nf > 0.0)) throw PreconditionError("anchor is an equilibrium: no transversal section");
  PoincareSection sec;
  sec.anchor = anchor;
  sec.normal = f / nf;
  Eigen::HouseholderQR<Mat> qr(sec.normal);
  const Mat Q = qr.householderQ();
  sec.chart = Q.rightCols(anchor.size() - 1);
  sec.crossing_direction = GuardDirection::rising;
  return sec;
}

PoincareSection coordinate_section(const StateVector& anchor, Eigen::Index index,
                                   GuardDirection direction) {
  const Eigen::Index n = anchor.size();
  if (index < 0 || index >= n) throw InputError("section coordinate out of range");
  PoincareSection sec;
  sec.anchor = anchor;
  sec.normal = Vec::Unit(n, index);
  sec.chart = Mat::Zero(n, n - 1);
  for (Eigen::Index j = 0, c = 0; j < n; ++j)
    if (j != index) sec.chart(j, c++) = 1.0;
  sec.crossing_direction = direction;
  return sec;
}

double time_to_impact(const HybridSystemSpec& spec, const StateVector& s, double t_max,
                      double tol) {
  if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
  const SegmentResult r = integrate_segment(spec, s, 0.0, t_max, tol);
  return r.impact ? r.impact->time : std::numeric_limits<double>::infinity();
}

Vec return_map(const HybridSystemSpec& spec, const PoincareSection& section,
               const Vec& chart_point, const ReturnMapOptions& opt) {
  StateVector s = section.lift(chart_point);
  double t = 0.0;
  int impacts = 0;
  const EventFunction crossing{[&section](const Vec& x) { return section.value(x); },
                               section.crossing_direction, spec.event_tolerance, 1e-8};
  for (;;) {
    std::vector<EventFunction> events;
    if (spec.guard) events.push_back({spec.guard, spec.guard_direction, spec.event_tolerance, 1e-8});
    const bool section_live = impacts >= opt.min_impacts;
    if (section_live) events.push_back(crossing);

    FlowResult flow = flow_until(spec.vector_field, s, t, opt.t_max, opt.tol, events);
    if (!flow.event_index) {
      std::ostringstream os;
      os << "no return to the section within t_max = " << opt.t_max;
      throw NoImpactError(os.str());
    }
    const bool is_guard = spec.guard && *flow.event_index == 0;
    if (!is_guard) return section.project(flow.event_state);

    ImpactEvent ev;
    ev.time = flow.event_time;
    ev.pre_state = flow.event_state;
    ev.guard_residual = flow.event_residual;
    s = apply_reset(spec, ev);
    t = ev.time;
    if (++impacts > opt.max_impacts)
      throw NumericalError("return map exceeded the impact budget before reaching the section");
  }
}

Mat return_map_jacobian(const HybridSystemSpec& spec, const PoincareSection& section, double h,
                        const ReturnMapOptions& opt) {
  const Eigen::Index m = section.dimension();
  Mat J(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double step = h * std::max(1.0, std::abs(section.anchor.dot(section.chart.col(j))));
    Vec cp = Vec::Zero(m), cm = Vec::Zero(m);
    cp[j] = step;
    cm[j] = -step;
    Vec fp, fm;
    try {
      fp = return_map(spec, section, cp, opt);
      fm = return_map(spec, section, cm, opt);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "return map failed along chart direction " << j << ": " << e.what();
      throw NumericalError(os.str());
    }
    J.col(j) = (fp - fm) / (2.0 * step);
  }
  return J;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::asymptotically_stable: return "asymptotically_stable";
    case Stability::marginally_stable: return "marginally_stable";
    case Stability::unstable: return "unstable";
    case Stability::degenerate: return "degenerate";
  }
  return "degenerate";
}

StabilityReport analyze_stability(const Mat& jacobian, double tol0, double tol1,
                                  std::optional<int> expected_unit) {
  StabilityReport rep;
  rep.jacobian = jacobian;
  rep.tol0 = tol0;
  rep.tol1 = tol1;
  rep.eigenvalues = eigenvalues(jacobian);
  sort_eigenvalues(rep.eigenvalues);

  bool outside = false, others_inside = true;
  double max_mod = 0.0;
  for (const auto& lam : rep.eigenvalues) {
    const double mod = std::abs(lam);
    rep.eigenvalue_residuals.push_back(eigenvalue_residual(jacobian, lam));
    max_mod = std::max(max_mod, mod);
    if (mod <= tol0) ++rep.lambda0_count;
    if (std::abs(mod - 1.0) <= tol1) {
      ++rep.lambda1_count;
    } else {
      if (mod > 1.0 + tol1) outside = true;
      if (mod >= 1.0 - 10.0 * tol1) others_inside = false;
    }
  }

  if (outside) {
    rep.classification = Stability::unstable;
  } else if (max_mod < 1.0 - tol1) {
    rep.classification = Stability::asymptotically_stable;
  } else if (others_inside && (!expected_unit || rep.lambda1_count == *expected_unit)) {
    rep.classification = Stability::marginally_stable;
  } else {
    rep.classification = Stability::degenerate;
  }
  return rep;
}

SpectralBounds check_spectral_bounds(StabilityReport& report, int r, int beta, int n_minus_1) {
  SpectralBounds b;
  b.lambda0_required = std::max(0, n_minus_1 - beta);
  b.lambda1_required = std::max(0, r);
  b.lemma_ok = report.lambda0_count >= b.lambda0_required;
  b.theorem_ok = report.lambda1_count >= b.lambda1_required;
  report.bounds = b;
  return b;
}

int reset_rank(const HybridSystemSpec& spec, const StateVector& s, double rel_tol) {
  const Vec grad = fd_gradient<double>(spec.guard, s);
  if (!(grad.norm() > 0.0)) throw NumericalError("guard gradient vanishes at the impact point");
  // Orthonormal basis of the guard's tangent space: complement of grad.
  Eigen::HouseholderQR<Mat> qr(grad / grad.norm());
  const Mat Q = qr.householderQ();
  const Mat T = Q.rightCols(s.size() - 1);
  const Mat J = fd_jacobian<double>(spec.reset, s) * T;
  Eigen::JacobiSVD<Mat> svd(J);
  const Vec sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * sv[0]) ++rank;
  return rank;
}

}  // namespace hybrid_routh
