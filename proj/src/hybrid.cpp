#include "hybrid_routh/hybrid.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hybrid_routh/finite_difference.hpp"

namespace hybrid_routh {

namespace {

bool fires(GuardDirection dir, double g_prev, double g_next) {
  switch (dir) {
    case GuardDirection::rising:
      return g_prev < 0.0 && g_next >= 0.0;
    case GuardDirection::falling:
      return g_prev > 0.0 && g_next <= 0.0;
    case GuardDirection::both:
      return (g_prev < 0.0 && g_next >= 0.0) || (g_prev > 0.0 && g_next <= 0.0);
  }
  return false;
}

double directional_rate(const ScalarFunction& g, const VectorField& field, const Vec& s) {
  const Vec f = field(s);
  const double scale = std::max(1.0, f.lpNorm<Eigen::Infinity>());
  const double d = fd_step(0.0) / scale;
  return (g(s + d * f) - g(s - d * f)) / (2.0 * d);
}

struct Root {
  double t;
  Vec y;
  double g;
};

// Illinois-modified regula falsi on the dense output of a single step,
// falling back to bisection when the secant stalls.
Root refine_root(const EventFunction& ev, const DenseStep<double>& step, double ga, double gb) {
  double a = step.t0, b = step.t1();
  int side = 0;
  Root best{b, step(b), gb};
  if (std::abs(ga) < std::abs(gb)) best = {a, step(a), ga};
  if (std::abs(best.g) <= ev.tolerance) return best;

  for (int iter = 0; iter < 200; ++iter) {
    double t = (iter % 8 == 7) ? 0.5 * (a + b) : b - gb * (b - a) / (gb - ga);
    if (!(t > std::min(a, b) && t < std::max(a, b))) t = 0.5 * (a + b);
    const Vec y = step(t);
    const double g = ev.function(y);
    if (std::abs(g) < std::abs(best.g)) best = {t, y, g};
    if (std::abs(g) <= ev.tolerance) return {t, y, g};
    if ((g < 0.0) == (gb < 0.0)) {
      b = t;
      gb = g;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = t;
      ga = g;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
    if (std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                              std::max(1.0, std::abs(b)))
      break;
  }
  if (std::abs(best.g) > ev.tolerance) {
    std::ostringstream os;
    os << "event refinement failed: residual " << best.g << " exceeds tolerance "
       << ev.tolerance << " at t = " << best.t;
    throw NumericalError(os.str());
  }
  return best;
}

}  // namespace

StateVector Segment::state_at(double t) const {
  if (dense.empty() || t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  return dense(t);
}

StateVector HybridTrajectory::state_at(double t) const {
  for (auto it = segments.rbegin(); it != segments.rend(); ++it)
    if (t >= it->t_begin()) return it->state_at(t);
  return segments.front().states.front();
}

std::size_t HybridTrajectory::sample_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.times.size();
  return n;
}

FlowResult flow_until(const VectorField& field, const StateVector& start, double t_start,
                      double t_max, double tol, std::span<const EventFunction> events) {
  if (!(tol > 0.0)) throw PreconditionError("integrator tolerance must be positive");
  if (!start.allFinite()) throw PreconditionError("start state has non-finite entries");

  FlowResult out;
  out.segment.times.push_back(t_start);
  out.segment.states.push_back(start);
  if (t_max <= t_start) return out;

  IntegratorOptions opt;
  opt.rtol = opt.atol = tol;
  DormandPrince<double> stepper([&field](double, const Vec& y) { return field(y); }, opt);
  stepper.reset(t_start, start);

  // An event that starts on its own zero set must leave it before it can fire.
  std::vector<double> g_prev(events.size());
  std::vector<bool> armed(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    g_prev[i] = events[i].function(start);
    armed[i] = std::abs(g_prev[i]) > events[i].tolerance;
  }

  while (stepper.t() < t_max) {
    const DenseStep<double>& step = stepper.step(t_max);
    const Vec& y = stepper.y();
    if (!y.allFinite())
      throw NumericalError("state became non-finite at t = " + std::to_string(stepper.t()));

    std::optional<Root> first;
    std::size_t first_index = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double g_next = events[i].function(y);
      if (armed[i] && fires(events[i].direction, g_prev[i], g_next)) {
        Root r = refine_root(events[i], step, g_prev[i], g_next);
        if (!first || r.t < first->t) {
          first = std::move(r);
          first_index = i;
        }
      }
      g_prev[i] = g_next;
      if (std::abs(g_next) > events[i].tolerance) armed[i] = true;
    }

    out.segment.dense.append(step);
    if (first) {
      const EventFunction& ev = events[first_index];
      const double rate = directional_rate(ev.function, field, first->y);
      if (std::abs(rate) < ev.tangency_threshold) {
        std::ostringstream os;
        os << "tangential crossing at t = " << first->t << " (event rate " << rate << ")";
        throw TangentialCrossing(os.str());
      }
      out.segment.times.push_back(first->t);
      out.segment.states.push_back(first->y);
      out.event_index = first_index;
      out.event_time = first->t;
      out.event_state = first->y;
      out.event_residual = std::abs(first->g);
      return out;
    }
    out.segment.times.push_back(stepper.t());
    out.segment.states.push_back(y);
  }
  return out;
}

double guard_rate(const HybridSystemSpec& spec, const StateVector& s) {
  const Vec grad = fd_gradient<double>(spec.guard, s);
  return grad.dot(spec.vector_field(s));
}

SegmentResult integrate_segment(const HybridSystemSpec& spec, const StateVector& start,
                                double t_start, double t_max, double tol) {
  std::vector<EventFunction> events;
  if (spec.guard) {
    const double g0 = spec.guard(start);
    if (std::abs(g0) <= spec.event_tolerance) {
      const double rate = guard_rate(spec, start);
      const bool into = (spec.guard_direction == GuardDirection::rising && rate > 0.0) ||
                        (spec.guard_direction == GuardDirection::falling && rate < 0.0);
      if (into)
        throw PreconditionError("segment starts on the guard moving into it");
    }
    events.push_back({spec.guard, spec.guard_direction, spec.event_tolerance, 1e-8});
  }

  FlowResult flow = flow_until(spec.vector_field, start, t_start, t_max, tol, events);
  SegmentResult out;
  if (flow.event_index) {
    ImpactEvent ev;
    ev.time = flow.event_time;
    ev.pre_state = flow.event_state;
    ev.guard_residual = flow.event_residual;
    out.impact = std::move(ev);
  }
  out.segment = std::move(flow.segment);
  return out;
}

StateVector apply_reset(const HybridSystemSpec& spec, const ImpactEvent& event) {
  if (!(event.guard_residual <= spec.event_tolerance))
    throw PreconditionError("impact guard residual exceeds the event tolerance");
  StateVector post = spec.reset(event.pre_state);
  if (!post.allFinite()) throw NumericalError("reset produced a non-finite state");

  const double g = spec.guard(post);
  const double on_guard = std::max(1e-8, 100.0 * spec.event_tolerance);
  std::ostringstream os;
  os.precision(17);
  if (std::abs(g) <= on_guard) {
    const double rate = guard_rate(spec, post);
    const bool bad = (spec.guard_direction == GuardDirection::rising && rate > 0.0) ||
                     (spec.guard_direction == GuardDirection::falling && rate < 0.0);
    if (bad) {
      os << "post-impact state at t = " << event.time
         << " moves back into the guard (guard rate " << rate << ")";
      throw AdmissibilityError(os.str());
    }
  } else {
    const bool bad = (spec.guard_direction == GuardDirection::rising && g > 0.0) ||
                     (spec.guard_direction == GuardDirection::falling && g < 0.0);
    if (bad) {
      os << "post-impact state at t = " << event.time
         << " lies on the triggering side of the guard (guard value " << g << ")";
      throw AdmissibilityError(os.str());
    }
  }
  return post;
}

HybridTrajectory run_hybrid(const HybridSystemSpec& spec, const StateVector& start, double t0,
                            double tf, double tol) {
  if (!(tf > t0)) throw PreconditionError("run_hybrid requires tf > t0");
  HybridTrajectory traj;
  traj.t0 = t0;
  traj.tf = tf;

  StateVector s = start;
  double t = t0;
  for (;;) {
    SegmentResult r = integrate_segment(spec, s, t, tf, tol);
    traj.segments.push_back(std::move(r.segment));
    if (!r.impact) break;

    ImpactEvent ev = std::move(*r.impact);
    std::ostringstream os;
    os.precision(17);
    if (!traj.impacts.empty() && ev.time - traj.impacts.back().time < spec.min_inter_impact) {
      os << "Zeno suspicion: impacts at t = " << traj.impacts.back().time << " and t = "
         << ev.time << " are closer than " << spec.min_inter_impact;
      throw ZenoError(os.str());
    }
    if (static_cast<long>(traj.impacts.size()) >= spec.max_impacts) {
      os << "maximum number of impacts (" << spec.max_impacts << ") exceeded at t = " << ev.time;
      throw ZenoError(os.str());
    }
    // A reset that fixes the pre-impact state leaves the trajectory stuck on
    // the guard: the next impact would follow with zero dwell time.
    const StateVector raw = spec.reset(ev.pre_state);
    const double scale = std::max(1.0, ev.pre_state.lpNorm<Eigen::Infinity>());
    if ((raw - ev.pre_state).lpNorm<Eigen::Infinity>() <= spec.event_tolerance * scale) {
      os << "Zeno suspicion: reset leaves the state on the guard unchanged at t = " << ev.time;
      throw ZenoError(os.str());
    }
    ev.post_state = apply_reset(spec, ev);
    s = ev.post_state;
    t = ev.time;
    traj.impacts.push_back(std::move(ev));
  }
  return traj;
}

}  // namespace hybrid_routh
