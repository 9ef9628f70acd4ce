#include "hybrid_routh/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace hybrid_routh {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be positive and finite (got " << v << ")";
    throw InputError(os.str());
  }
}

ReversalSymmetry mirror_phi() {
  ReversalSymmetry sym;
  sym.F = [](const Vec& q) -> Vec {
    Vec out = q;
    out[1] = -q[1];
    return out;
  };
  sym.dF = [](const Vec&) -> Mat {
    Mat J = Mat::Identity(2, 2);
    J(1, 1) = -1.0;
    return J;
  };
  // F is linear, so the velocity block of dPhi has no position derivative.
  sym.tangent = [](const Vec&) -> Mat {
    Vec d(4);
    d << 1.0, -1.0, -1.0, 1.0;
    return d.asDiagonal();
  };
  return sym;
}

}  // namespace

MechanicalSystem pendulum_system(const PendulumParams& p) {
  require_positive(p.m, "pendulum mass m");
  require_positive(p.k, "pendulum spring constant k");
  MechanicalSystem sys;
  sys.shape_dim = 1;
  sys.names = {"r"};
  sys.cyclic_name = "theta";
  sys.reference_point = Vec::Ones(1);
  sys.mass_shape = [m = p.m](const Vec&) -> Mat { return Mat::Constant(1, 1, m); };
  sys.inertia_cyclic = [m = p.m](const Vec& x) { return m * x[0] * x[0]; };
  sys.potential = [k = p.k](const Vec& x) { return 0.5 * k * x[0] * x[0]; };
  sys.potential_gradient = [k = p.k](const Vec& x) -> Vec { return Vec::Constant(1, k * x[0]); };
  sys.inertia_cyclic_gradient = [m = p.m](const Vec& x) -> Vec {
    return Vec::Constant(1, 2.0 * m * x[0]);
  };
  sys.mass_shape_gradient = [](const Vec&) { return std::vector<Mat>{Mat::Zero(1, 1)}; };
  return sys;
}

RouthianSystem pendulum_routhian(const PendulumParams& p) {
  return RouthianSystem(pendulum_system(p), p.mu);
}

Vec pendulum_field(const PendulumParams& p, const StateVector& s) {
  const double r = s[0];
  if (!(p.m * r * r >= kSingularInertia)) throw SingularInertia("pendulum radius is zero");
  Vec out(2);
  out << s[1], p.mu * p.mu / (p.m * p.m * r * r * r) - p.k * r / p.m;
  return out;
}

double pendulum_regularity(const PendulumParams& p, double r) { return (p.m * r) * (p.m * r); }

ReversalSymmetry pendulum_symmetry() {
  ReversalSymmetry sym;
  sym.F = [](const Vec& q) { return q; };
  sym.dF = [](const Vec& q) -> Mat { return Mat::Identity(q.size(), q.size()); };
  return sym;
}

void validate(const SlipParams& p, SlipReset reset) {
  require_positive(p.m, "mass m");
  require_positive(p.I, "inertia I");
  require_positive(p.g, "gravity g");
  require_positive(p.l0, "rest length l0");
  require_positive(p.kappa, "spring constant kappa");
  if (!std::isfinite(p.mu)) throw InputError("momentum mu must be finite");
  if (reset == SlipReset::fixed_touchdown && !(p.phi0 > 0.0 && p.phi0 < std::numbers::pi / 2))
    throw InputError("touchdown angle phi0 must lie in (0, pi/2)");
}

MechanicalSystem slip_mechanical_system(const SlipParams& p) {
  MechanicalSystem sys;
  sys.shape_dim = 2;
  sys.names = {"xi", "phi"};
  sys.cyclic_name = "theta";
  sys.reference_point = Vec(2);
  sys.reference_point << p.l0, 0.0;
  sys.mass_shape = [m = p.m](const Vec& x) -> Mat {
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = m;
    M(1, 1) = m * x[0] * x[0];
    return M;
  };
  sys.inertia_cyclic = [I = p.I](const Vec&) { return I; };
  sys.potential = [p](const Vec& x) {
    const double d = x[0] - p.l0;
    return p.m * p.g * x[0] * std::cos(x[1]) + 0.5 * p.kappa * d * d;
  };
  return sys;
}

Vec slip_field(const SlipParams& p, const StateVector& s) {
  const double xi = s[0], phi = s[1], xid = s[2], phid = s[3];
  Vec out(4);
  out << xid, phid,
      xi * phid * phid - p.g * std::cos(phi) - p.kappa * (xi - p.l0) / p.m,
      p.g / xi * std::sin(phi) - 2.0 * phid * xid / xi;
  return out;
}

LegParams leg_params(const SlipParams& p) { return {p.m, p.g, p.kappa, p.l0}; }

SlipModel slip_system(const SlipParams& p, SlipReset reset) {
  validate(p, reset);
  SlipModel model{p,
                  RouthianSystem(slip_mechanical_system(p), p.mu),
                  [p](const Vec& s) { return slip_field(p, s); },
                  {},
                  mirror_phi(),
                  [](double mu, const ImpactEvent&) { return -mu; },
                  [](double theta) { return -theta; }};

  HybridSystemSpec& spec = model.spec;
  spec.vector_field = model.field;
  spec.guard = [l0 = p.l0](const Vec& s) { return s[0] - l0; };
  spec.guard_direction = GuardDirection::rising;
  if (reset == SlipReset::symmetric) {
    spec.reset = [sym = model.symmetry](const Vec& s) { return sym.apply(s); };
  } else {
    spec.reset = [p](const Vec& s) -> Vec {
      Vec out(4);
      out << p.l0, -p.phi0, -s[2], s[3];
      return out;
    };
  }
  return model;
}

StateVector ControlledSlipModel::seed(double phidot) const {
  StateVector s(4);
  s << manifold.h(0.0), 0.0, -manifold.slope(0.0) * phidot, phidot;
  return s;
}

ControlledSlipModel controlled_slip_system(const ControlledSlipParams& p) {
  validate(p.slip);
  if (p.slip.m != 1.0)
    throw InputError("the controlled SLIP requires m = 1 (u enters xi'' without a 1/m factor)");
  require_positive(p.c0, "constraint coefficient c0");
  require_positive(p.c2, "constraint coefficient c2");

  const SlipModel open = slip_system(p.slip, SlipReset::symmetric);

  ZeroDynamicsManifold Z;
  Z.h = [c0 = p.c0, c2 = p.c2](double phi) { return c0 + c2 * phi * phi; };
  Z.dh = [c2 = p.c2](double phi) { return 2.0 * c2 * phi; };
  Z.d2h = [c2 = p.c2](double) { return 2.0 * c2; };
  Z.actuated_index = 0;
  Z.unactuated_index = 1;
  Z.even = true;

  Mat C = Mat::Zero(4, 1);
  C(2, 0) = 1.0;
  ControlledRouthian plant(open.routhian, C, {0}, open.field);
  Feedback u = u_star_feedback(Z, leg_params(p.slip));

  HybridSystemSpec closed = open.spec;
  closed.vector_field = plant.closed_loop(u);

  return ControlledSlipModel{p, std::move(plant), std::move(Z), std::move(u), std::move(closed),
                             open.symmetry};
}

}  // namespace hybrid_routh
