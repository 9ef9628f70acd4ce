#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hybrid_routh/errors.hpp"
#include "hybrid_routh/types.hpp"

namespace hybrid_routh {

/// All eigenvalues of a small square real matrix, with multiplicity.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> eigenvalues(
    const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() != A.cols()) throw InputError("eigenvalues need a square matrix");
  if (A.rows() == 0) return {};
  Eigen::EigenSolver<MatrixX<Scalar>> es(A.eval(), false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Smallest singular value of (A - lambda I).
template <typename Derived>
typename Derived::Scalar eigenvalue_residual(const Eigen::MatrixBase<Derived>& A,
                                             std::complex<typename Derived::Scalar> lambda) {
  using Scalar = typename Derived::Scalar;
  using Complex = std::complex<Scalar>;
  using CMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  CMat B = A.template cast<Complex>();
  B.diagonal().array() -= lambda;
  Eigen::JacobiSVD<CMat> svd(B);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

/// Orders by real part, then imaginary part.
template <typename Scalar>
void sort_eigenvalues(std::vector<std::complex<Scalar>>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
}

}  // namespace hybrid_routh
