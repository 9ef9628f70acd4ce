#pragma once

#include <cmath>
#include <limits>

#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// Central-difference step: cube root of machine epsilon, scaled by max(1, |x|).
template <typename Scalar>
Scalar fd_step(Scalar x) {
  using std::abs;
  using std::cbrt;
  using std::max;
  return cbrt(std::numeric_limits<Scalar>::epsilon()) * max(Scalar(1), abs(x));
}

template <typename Scalar, typename F>
VectorX<Scalar> fd_gradient(F&& f, const VectorX<Scalar>& x) {
  VectorX<Scalar> g(x.size());
  VectorX<Scalar> xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar h = fd_step(x[i]);
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i]);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

/// Jacobian of a vector map, one central difference per column.
template <typename Scalar, typename F>
MatrixX<Scalar> fd_jacobian(F&& f, const VectorX<Scalar>& x) {
  VectorX<Scalar> xp = x, xm = x;
  MatrixX<Scalar> J;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const Scalar h = fd_step(x[j]);
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    const VectorX<Scalar> col = (f(xp) - f(xm)) / (xp[j] - xm[j]);
    if (j == 0) J.resize(col.size(), x.size());
    J.col(j) = col;
    xp[j] = xm[j] = x[j];
  }
  return J;
}

/// Partial derivative of a matrix-valued map with respect to coordinate k.
template <typename Scalar, typename F>
MatrixX<Scalar> fd_partial_matrix(F&& f, const VectorX<Scalar>& x, Eigen::Index k) {
  VectorX<Scalar> xp = x, xm = x;
  const Scalar h = fd_step(x[k]);
  xp[k] = x[k] + h;
  xm[k] = x[k] - h;
  return (f(xp) - f(xm)) / (xp[k] - xm[k]);
}

}  // namespace hybrid_routh
