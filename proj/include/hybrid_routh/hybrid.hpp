#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hybrid_routh/dopri5.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// A simple hybrid system: smooth flow, scalar guard, reset map.
///
/// Guards are directional: an event fires only when the guard changes sign
/// in `guard_direction`. An empty `guard` means the flow is never
/// interrupted.
struct HybridSystemSpec {
  VectorField vector_field;
  ScalarFunction guard;
  StateMap reset;
  GuardDirection guard_direction = GuardDirection::rising;
  double min_inter_impact = 1e-6;
  long max_impacts = 10'000;
  double event_tolerance = 1e-10;
};

struct ImpactEvent {
  double time = 0.0;
  StateVector pre_state;
  StateVector post_state;
  double guard_residual = 0.0;
};

/// One smooth piece of a hybrid trajectory.
struct Segment {
  std::vector<double> times;
  std::vector<StateVector> states;
  DenseSolution<double> dense;

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  /// Dense-output evaluation; exact at stored samples.
  StateVector state_at(double t) const;
};

struct HybridTrajectory {
  std::vector<Segment> segments;
  std::vector<ImpactEvent> impacts;
  double t0 = 0.0;
  double tf = 0.0;

  /// Right-continuous evaluation: at an impact time the post-impact state.
  StateVector state_at(double t) const;
  const StateVector& final_state() const { return segments.back().states.back(); }
  std::size_t sample_count() const;
};

/// A scalar event function used by the low-level flow driver.
struct EventFunction {
  ScalarFunction function;
  GuardDirection direction = GuardDirection::rising;
  double tolerance = 1e-10;
  /// |d/dt function| below this at the refined root is a tangential crossing.
  double tangency_threshold = 1e-8;
};

struct FlowResult {
  Segment segment;
  /// Index into the event list of the event that stopped the flow.
  std::optional<std::size_t> event_index;
  double event_time = 0.0;
  StateVector event_state;
  double event_residual = 0.0;
};

/// Integrates `field` from (t_start, start) until t_max or the first event
/// in `events` (the earliest one wins when several fire in one step).
FlowResult flow_until(const VectorField& field, const StateVector& start, double t_start,
                      double t_max, double tol, std::span<const EventFunction> events);

struct SegmentResult {
  Segment segment;
  std::optional<ImpactEvent> impact;  // post_state left empty
};

SegmentResult integrate_segment(const HybridSystemSpec& spec, const StateVector& start,
                                double t_start, double t_max, double tol = 1e-10);

/// Applies the reset to a refined impact and checks post-impact admissibility.
StateVector apply_reset(const HybridSystemSpec& spec, const ImpactEvent& event);

HybridTrajectory run_hybrid(const HybridSystemSpec& spec, const StateVector& start, double t0,
                            double tf, double tol = 1e-10);

/// d/dt of the guard along the flow, grad(guard) . X(s), with the gradient
/// taken by central differences.
double guard_rate(const HybridSystemSpec& spec, const StateVector& s);

}  // namespace hybrid_routh
