#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "spilloverfree/types.hpp"

namespace spillfree {

template <typename Derived>
auto symmetrize(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> s = a;
  return Matrix<Scalar>((s + s.transpose()) / Scalar(2));
}

/// ||A - A^T||_F / ||A||_F, zero for the zero matrix.
template <typename Derived>
typename Derived::RealScalar relative_asymmetry(const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Derived::RealScalar;
  const Real scale = a.norm();
  if (scale == Real(0)) return Real(0);
  return (a - a.transpose()).norm() / scale;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  return a.allFinite();
}

/// Matrix 2-norm. Exactly symmetric matrices go through the symmetric
/// eigensolver, everything else through the SVD.
template <typename Derived>
typename Derived::RealScalar spectral_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Derived::RealScalar;
  if (a.size() == 0) return Real(0);
  Matrix<Scalar> m = a;
  if (m.rows() == m.cols() && m == m.transpose()) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::BDCSVD<Matrix<Scalar>> svd(m);
  return svd.singularValues()(0);
}

/// Ratio of the smallest to the largest singular value (0 for a zero matrix).
template <typename Derived>
typename Derived::RealScalar singular_value_ratio(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Derived::RealScalar;
  if (a.size() == 0) return Real(1);
  Eigen::BDCSVD<Matrix<Scalar>> svd{Matrix<Scalar>(a)};
  const auto& sv = svd.singularValues();
  if (sv(0) == Real(0)) return Real(0);
  return sv(sv.size() - 1) / sv(0);
}

template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& a, double rel_tol) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Matrix<Scalar>> svd{Matrix<Scalar>(a)};
  const auto& sv = svd.singularValues();
  if (sv(0) == 0) return 0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sv(0)) ++rank;
  }
  return rank;
}

/// Eigen's estimate reports 1 for some matrices with an exactly zero pivot,
/// so zero and non-finite pivots are screened first.
template <typename Scalar>
Scalar lu_rcond(const Eigen::PartialPivLU<Matrix<Scalar>>& lu) {
  const auto pivots = lu.matrixLU().diagonal();
  if (!pivots.allFinite() || (pivots.array() == Scalar(0)).any()) return Scalar(0);
  const Scalar rc = lu.rcond();
  return std::isfinite(static_cast<double>(rc)) ? rc : Scalar(0);
}

/// LU factorization that throws `code` when the reciprocal condition
/// estimate falls below `min_rcond`.
template <typename Scalar>
Eigen::PartialPivLU<Matrix<Scalar>> checked_lu(const Matrix<Scalar>& a, double min_rcond,
                                               ErrorCode code, const std::string& what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, what + " is not square");
  }
  Eigen::PartialPivLU<Matrix<Scalar>> lu(a);
  const auto rc = lu_rcond(lu);
  if (!(rc >= min_rcond)) {
    throw Error(code, what + " is numerically singular (reciprocal condition " +
                          std::to_string(static_cast<double>(rc)) + ")");
  }
  return lu;
}

template <typename Scalar>
Scalar reciprocal_condition(const Matrix<Scalar>& a) {
  if (a.size() == 0) return Scalar(1);
  return lu_rcond(Eigen::PartialPivLU<Matrix<Scalar>>(a));
}

template <typename Scalar>
Matrix<Scalar> checked_inverse(const Matrix<Scalar>& a, double min_rcond, ErrorCode code,
                               const std::string& what) {
  return checked_lu(a, min_rcond, code, what).inverse();
}

/// Applies M = diag(M_u, 0) to X without forming M.
template <typename Scalar, typename Derived>
Matrix<Scalar> apply_mass(const Matrix<Scalar>& m_u, const Eigen::MatrixBase<Derived>& x) {
  const Index n_u = m_u.rows();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(x.rows(), x.cols());
  out.topRows(n_u).noalias() = m_u * x.topRows(n_u);
  return out;
}

}  // namespace spillfree
