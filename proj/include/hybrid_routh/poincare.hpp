#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hybrid_routh/hybrid.hpp"
#include "hybrid_routh/spectrum.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// Affine hyperplane {s : normal . (s - anchor) = 0} with an orthonormal chart.
struct PoincareSection {
  StateVector anchor;
  Vec normal;  // unit length
  Mat chart;   // dim x (dim - 1), orthonormal columns spanning normal^perp
  GuardDirection crossing_direction = GuardDirection::rising;

  double value(const StateVector& s) const { return normal.dot(s - anchor); }
  StateVector lift(const Vec& c) const { return anchor + chart * c; }
  Vec project(const StateVector& s) const { return chart.transpose() * (s - anchor); }
  Eigen::Index dimension() const { return chart.cols(); }
};

/// Hyperplane through `anchor` orthogonal to X(anchor), crossed in the flow
/// direction.
PoincareSection section_orthogonal_to_flow(const VectorField& field, const StateVector& anchor);

/// Coordinate hyperplane {s_index = anchor_index}; the chart keeps the
/// remaining coordinates in order.
PoincareSection coordinate_section(const StateVector& anchor, Eigen::Index index,
                                   GuardDirection direction);

struct ReturnMapOptions {
  double tol = 1e-12;
  double t_max = 20.0;
  int min_impacts = 1;   // section crossings before this many impacts are ignored
  int max_impacts = 16;
};

/// First positive time at which the flow from s reaches the guard;
/// +infinity when it does not by t_max.
double time_to_impact(const HybridSystemSpec& spec, const StateVector& s, double t_max,
                      double tol = 1e-10);

/// One hybrid cycle from the lifted chart point back to the section.
Vec return_map(const HybridSystemSpec& spec, const PoincareSection& section,
               const Vec& chart_point, const ReturnMapOptions& opt = {});

/// Central-difference Jacobian of the return map at the anchor (chart
/// origin); the step along chart column j is h * max(1, |anchor . chart_j|).
Mat return_map_jacobian(const HybridSystemSpec& spec, const PoincareSection& section,
                        double h = 1e-5, const ReturnMapOptions& opt = {});

enum class Stability { asymptotically_stable, marginally_stable, unstable, degenerate };

std::string to_string(Stability s);

struct SpectralBounds {
  int lambda0_required = 0;  // n - 1 - beta
  int lambda1_required = 0;  // r
  bool lemma_ok = false;     // Lambda_0 >= n - 1 - beta
  bool theorem_ok = false;   // Lambda_1 >= r
  bool all() const { return lemma_ok && theorem_ok; }
};

struct StabilityReport {
  Mat jacobian;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> eigenvalue_residuals;  // sigma_min(J - lambda I)
  int lambda0_count = 0;
  int lambda1_count = 0;
  double tol0 = 1e-4;
  double tol1 = 1e-4;
  std::optional<SpectralBounds> bounds;
  Stability classification = Stability::degenerate;
};

/// Spectrum, Lambda counts and classification of a return-map Jacobian.
/// `expected_unit` is the symmetry-predicted Lambda_1 (r); marginal
/// stability requires the unit-modulus set to match it exactly.
StabilityReport analyze_stability(const Mat& jacobian, double tol0 = 1e-4, double tol1 = 1e-4,
                                  std::optional<int> expected_unit = std::nullopt);

/// Lower bounds Lambda_0 >= n - 1 - beta and Lambda_1 >= r. Also stored in
/// the report.
SpectralBounds check_spectral_bounds(StabilityReport& report, int r, int beta, int n_minus_1);

/// Numerical rank of the reset Jacobian restricted to the tangent space of
/// the guard at s (singular values above rel_tol times the largest).
int reset_rank(const HybridSystemSpec& spec, const StateVector& s, double rel_tol = 1e-8);

}  // namespace hybrid_routh
