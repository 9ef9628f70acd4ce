#pragma once

/*
 * Runge-Kutta order 5(4) Dormand/Prince pair with the 4th order
 * continuous extension of Hairer, Norsett & Wanner (contd5).
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hybrid_routh/errors.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 selects a step automatically
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 5'000'000;
};

/// One accepted step together with its dense-output coefficients.
template <typename Scalar>
struct DenseStep {
  Scalar t0{};
  Scalar h{};
  VectorX<Scalar> r1, r2, r3, r4, r5;

  Scalar t1() const { return t0 + h; }

  VectorX<Scalar> operator()(Scalar t) const {
    const Scalar theta = (t - t0) / h;
    const Scalar theta1 = Scalar(1) - theta;
    return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
  }
};

template <typename Scalar>
class DormandPrince {
 public:
  using Vector = VectorX<Scalar>;
  using Rhs = std::function<Vector(Scalar, const Vector&)>;

  DormandPrince(Rhs rhs, IntegratorOptions options)
      : rhs_(std::move(rhs)), opt_(options) {}

  void reset(Scalar t, const Vector& y) {
    t_ = t;
    y_ = y;
    k1_ = rhs_(t_, y_);
    ++evaluations_;
    h_ = opt_.initial_step > 0 ? Scalar(opt_.initial_step) : Scalar(0);
    steps_ = 0;
  }

  Scalar t() const { return t_; }
  const Vector& y() const { return y_; }
  const Vector& derivative() const { return k1_; }
  long evaluations() const { return evaluations_; }

  /// Advances by one accepted step that does not pass t_end (t_end > t()).
  /// Returns the dense output of that step.
  const DenseStep<Scalar>& step(Scalar t_end) {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;
    const Scalar span = t_end - t_;
    const Scalar dir = span >= 0 ? Scalar(1) : Scalar(-1);
    if (h_ == Scalar(0)) h_ = initial_step(dir);
    h_ = dir * min(abs(h_), Scalar(opt_.max_step));

    for (;;) {
      if (++steps_ > opt_.max_steps)
        throw NumericalError("integrator exceeded the maximum number of steps");
      bool last = false;
      if (abs(h_) >= abs(t_end - t_)) {
        h_ = t_end - t_;
        last = true;
      }
      const Scalar h_floor =
          Scalar(16) * std::numeric_limits<Scalar>::epsilon() * max(Scalar(1), abs(t_));
      if (abs(h_) < h_floor)
        throw StepSizeUnderflow("step size underflow at t = " +
                                std::to_string(static_cast<double>(t_)));

      attempt(h_);
      const Scalar err = error_norm();
      if (!std::isfinite(static_cast<double>(err)) || err > Scalar(1)) {
        const Scalar fac = std::isfinite(static_cast<double>(err))
                               ? max(Scalar(0.2), Scalar(0.9) * pow(err, Scalar(-0.2)))
                               : Scalar(0.2);
        h_ *= fac;
        continue;
      }

      dense_.t0 = t_;
      dense_.h = h_;
      dense_.r1 = y_;
      const Vector ydiff = ynew_ - y_;
      const Vector bspl = h_ * k1_ - ydiff;
      dense_.r2 = ydiff;
      dense_.r3 = bspl;
      dense_.r4 = ydiff - h_ * k7_ - bspl;
      dense_.r5 = h_ * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);

      t_ = last ? t_end : t_ + h_;
      y_ = ynew_;
      k1_ = k7_;  // FSAL

      const Scalar fac = err > Scalar(0)
                             ? min(Scalar(10), Scalar(0.9) * pow(err, Scalar(-0.2)))
                             : Scalar(10);
      if (!last) h_ *= max(Scalar(0.2), fac);
      return dense_;
    }
  }

 private:
  void attempt(Scalar h) {
    const Scalar t = t_;
    k2_ = rhs_(t + c2 * h, y_ + h * (a21 * k1_));
    k3_ = rhs_(t + c3 * h, y_ + h * (a31 * k1_ + a32 * k2_));
    k4_ = rhs_(t + c4 * h, y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_));
    k5_ = rhs_(t + c5 * h, y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_));
    k6_ = rhs_(t + h, y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_));
    ynew_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    k7_ = rhs_(t + h, ynew_);
    evaluations_ += 6;
    err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
  }

  Scalar error_norm() const {
    using std::abs;
    using std::max;
    using std::sqrt;
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const Scalar sc = Scalar(opt_.atol) + Scalar(opt_.rtol) * max(abs(y_[i]), abs(ynew_[i]));
      const Scalar r = err_[i] / sc;
      sum += r * r;
    }
    return sqrt(sum / Scalar(std::max<Eigen::Index>(1, y_.size())));
  }

  // Hairer's starting-step heuristic.
  Scalar initial_step(Scalar dir) {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;
    using std::sqrt;
    Vector sc(y_.size());
    for (Eigen::Index i = 0; i < y_.size(); ++i)
      sc[i] = Scalar(opt_.atol) + Scalar(opt_.rtol) * abs(y_[i]);
    const Scalar n = Scalar(std::max<Eigen::Index>(1, y_.size()));
    const Scalar d0 = sqrt((y_.array() / sc.array()).square().sum() / n);
    const Scalar d1v = sqrt((k1_.array() / sc.array()).square().sum() / n);
    Scalar h0 = (d0 < Scalar(1e-5) || d1v < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1v;
    h0 = min(h0, Scalar(opt_.max_step));
    const Vector y1 = y_ + dir * h0 * k1_;
    const Vector f1 = rhs_(t_ + dir * h0, y1);
    ++evaluations_;
    const Scalar d2 = sqrt(((f1 - k1_).array() / sc.array()).square().sum() / n) / h0;
    const Scalar dmax = max(d1v, d2);
    const Scalar h1 = dmax <= Scalar(1e-15) ? max(Scalar(1e-6), h0 * Scalar(1e-3))
                                             : pow(Scalar(0.01) / dmax, Scalar(0.2));
    return dir * min(Scalar(100) * h0, h1);
  }

  static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                          c5 = Scalar(8) / 9;
  static constexpr Scalar a21 = Scalar(1) / 5;
  static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                          a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
  static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                          a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                          a65 = Scalar(-5103) / 18656;
  static constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113,
                          a74 = Scalar(125) / 192, a75 = Scalar(-2187) / 6784,
                          a76 = Scalar(11) / 84;
  static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                          e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                          e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
  static constexpr Scalar d1 = Scalar(-12715105075.0) / Scalar(11282082432.0),
                          d3 = Scalar(87487479700.0) / Scalar(32700410799.0),
                          d4 = Scalar(-10690763975.0) / Scalar(1880347072.0),
                          d5 = Scalar(701980252875.0) / Scalar(199316789632.0),
                          d6 = Scalar(-1453857185.0) / Scalar(822651844.0),
                          d7 = Scalar(69997945.0) / Scalar(29380423.0);

  Rhs rhs_;
  IntegratorOptions opt_;
  Scalar t_{};
  Scalar h_{};
  long steps_ = 0;
  long evaluations_ = 0;
  Vector y_, ynew_, err_;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  DenseStep<Scalar> dense_;
};

/// Piecewise dense solution assembled from consecutive accepted steps.
template <typename Scalar>
class DenseSolution {
 public:
  void append(const DenseStep<Scalar>& s) { steps_.push_back(s); }
  bool empty() const { return steps_.empty(); }
  Scalar t_begin() const { return steps_.front().t0; }
  Scalar t_end() const { return steps_.back().t1(); }
  const std::vector<DenseStep<Scalar>>& steps() const { return steps_; }

  /// Evaluates at t; values outside the covered span are extrapolated
  /// from the nearest step.
  VectorX<Scalar> operator()(Scalar t) const {
    const bool forward = steps_.front().h >= 0;
    auto it = std::lower_bound(steps_.begin(), steps_.end(), t,
                               [forward](const DenseStep<Scalar>& s, Scalar v) {
                                 return forward ? s.t1() < v : s.t1() > v;
                               });
    if (it == steps_.end()) --it;
    return (*it)(t);
  }

 private:
  std::vector<DenseStep<Scalar>> steps_;
};

/// Integrates dy/dt = f(t, y) from (t0, y0) to t1 (either direction).
template <typename Scalar>
DenseSolution<Scalar> integrate_dense(
    const typename DormandPrince<Scalar>::Rhs& f, Scalar t0,
    const VectorX<Scalar>& y0, Scalar t1, const IntegratorOptions& opt) {
  DormandPrince<Scalar> stepper(f, opt);
  stepper.reset(t0, y0);
  DenseSolution<Scalar> out;
  while (stepper.t() != t1) out.append(stepper.step(t1));
  return out;
}

}  // namespace hybrid_routh
