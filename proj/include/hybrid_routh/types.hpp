#pragma once

#include <functional>

#include <Eigen/Core>

namespace hybrid_routh {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of TP: shape positions first, then shape velocities.
using StateVector = Vec;

/// Autonomous first-order vector field on TP.
using VectorField = std::function<Vec(const Vec&)>;
using ScalarFunction = std::function<double(const Vec&)>;
using StateMap = std::function<Vec(const Vec&)>;

/// Sign of the time derivative of a guard function at which an event fires.
enum class GuardDirection { rising, falling, both };

inline Eigen::Index shape_dim_of(const Vec& s) { return s.size() / 2; }

inline auto positions(const Vec& s) { return s.head(s.size() / 2); }
inline auto velocities(const Vec& s) { return s.tail(s.size() / 2); }

inline Vec join_state(const Vec& q, const Vec& qdot) {
  Vec s(q.size() + qdot.size());
  s << q, qdot;
  return s;
}

}  // namespace hybrid_routh
