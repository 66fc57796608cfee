#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "spilloverfree/linalg.hpp"
#include "spilloverfree/types.hpp"

namespace spillfree {

/// The pencil lambda*M + K with M = diag(M_u, 0) and K partitioned as
/// [K_u K_uphi; K_uphi^T K_phi]. Construction certifies regularity: M_u and
/// K_phi must both be numerically nonsingular. M is never formed.
///
/// The class admits n_phi == 0 (an ordinary symmetric pencil) so spectral
/// reconstructions can return degenerate shapes; validate_pencil does not.
template <typename Scalar = double>
class StructuredPencil {
 public:
  StructuredPencil(Matrix<Scalar> m_u, Matrix<Scalar> k, Index n_u, Index n_phi,
                   const Tolerances& tol = {})
      : n_u_(n_u), n_phi_(n_phi) {
    if (n_u < 1 || n_phi < 0) {
      throw Error(ErrorCode::DimensionMismatch, "n_u must be positive and n_phi nonnegative");
    }
    if (m_u.rows() != n_u || m_u.cols() != n_u) {
      throw Error(ErrorCode::DimensionMismatch, "M_u must be n_u x n_u");
    }
    if (k.rows() != n_u + n_phi || k.cols() != n_u + n_phi) {
      throw Error(ErrorCode::DimensionMismatch, "K must be (n_u + n_phi) square");
    }
    if (!all_finite(m_u) || !all_finite(k)) {
      throw Error(ErrorCode::NonFiniteInput, "pencil coefficients must be finite");
    }
    if (relative_asymmetry(m_u) > tol.symmetry) {
      throw Error(ErrorCode::AsymmetricInput, "M_u is not symmetric");
    }
    if (relative_asymmetry(k) > tol.symmetry) {
      throw Error(ErrorCode::AsymmetricInput, "K is not symmetric");
    }
    m_u_ = symmetrize(m_u);
    k_ = symmetrize(k);
    if (!(reciprocal_condition(m_u_) >= tol.nonsingular)) {
      throw Error(ErrorCode::SingularBlock,
                  "M_u is singular; regularity requires nonsingular M_u and K_phi");
    }
    if (n_phi > 0 && !(reciprocal_condition(Matrix<Scalar>(K_phi())) >= tol.nonsingular)) {
      throw Error(ErrorCode::SingularBlock,
                  "K_phi is singular; regularity requires nonsingular M_u and K_phi");
    }
  }

  Index n_u() const { return n_u_; }
  Index n_phi() const { return n_phi_; }
  Index n() const { return n_u_ + n_phi_; }

  const Matrix<Scalar>& M_u() const { return m_u_; }
  const Matrix<Scalar>& K() const { return k_; }

  auto K_u() const { return k_.topLeftCorner(n_u_, n_u_); }
  auto K_uphi() const { return k_.topRightCorner(n_u_, n_phi_); }
  auto K_phi() const { return k_.bottomRightCorner(n_phi_, n_phi_); }

  /// M * X for M = diag(M_u, 0).
  template <typename Derived>
  Matrix<Scalar> apply_M(const Eigen::MatrixBase<Derived>& x) const {
    return apply_mass(m_u_, x);
  }

  /// ||M||_2, equal to ||M_u||_2.
  Scalar norm_M() const { return spectral_norm(m_u_); }

 private:
  Index n_u_;
  Index n_phi_;
  Matrix<Scalar> m_u_;
  Matrix<Scalar> k_;
};

template <typename Scalar>
StructuredPencil<Scalar> validate_pencil(const Matrix<Scalar>& m_u, const Matrix<Scalar>& k,
                                         Index n_u, Index n_phi, const Tolerances& tol = {}) {
  if (n_u < 1 || n_phi < 1) {
    throw Error(ErrorCode::DimensionMismatch, "n_u and n_phi must be positive");
  }
  return StructuredPencil<Scalar>(m_u, k, n_u, n_phi, tol);
}

template <typename Scalar>
struct SchurReduction {
  Matrix<Scalar> S;  // K_u - K_uphi K_phi^{-1} K_uphi^T
  Matrix<Scalar> R;  // -K_phi^{-1} K_uphi^T, lifts u to [u; R u]
};

/// Eliminates the electric block. Finite eigenpairs of the pencil are the
/// pairs of (lambda M_u + S) u = 0 lifted to x = [u; R u].
template <typename Scalar>
SchurReduction<Scalar> schur_reduce(const StructuredPencil<Scalar>& p,
                                    const Tolerances& tol = {}) {
  SchurReduction<Scalar> out;
  if (p.n_phi() == 0) {
    out.S = p.K();
    out.R.resize(0, p.n_u());
    return out;
  }
  auto lu = checked_lu(Matrix<Scalar>(p.K_phi()), tol.nonsingular, ErrorCode::SingularBlock,
                       "K_phi");
  out.R = -lu.solve(Matrix<Scalar>(p.K_uphi().transpose()));
  out.S = symmetrize(Matrix<Scalar>(p.K_u() + p.K_uphi() * out.R));
  return out;
}

template <typename Scalar>
struct Eigenpair {
  std::complex<Scalar> value;
  ComplexVector<Scalar> vector;
};

template <typename Scalar>
struct SpectrumResult {
  Index n_u = 0;
  Index n_phi = 0;
  /// Finite eigenpairs; conjugate pairs adjacent, positive imaginary part first.
  std::vector<Eigenpair<Scalar>> finite_pairs;
  /// Kernel basis of M, the columns [0; I].
  Matrix<Scalar> infinite_basis;
  /// Distance from each finite eigenvalue to the nearest other one.
  std::vector<Scalar> margins;

  Scalar spectral_radius() const {
    Scalar r(0);
    for (const auto& e : finite_pairs) r = std::max(r, std::abs(e.value));
    return r;
  }

  /// Index of the conjugate partner of a complex entry, or i itself when real.
  Index partner(Index i) const {
    if (finite_pairs[i].value.imag() > 0) return i + 1;
    if (finite_pairs[i].value.imag() < 0) return i - 1;
    return i;
  }
};

namespace detail {

/// Unit 2-norm with the first nonzero component rotated onto the positive
/// real axis.
template <typename Scalar>
void normalize_eigenvector(ComplexVector<Scalar>& x) {
  const Scalar nrm = x.norm();
  if (nrm == Scalar(0)) return;
  x /= nrm;
  const Scalar cutoff = std::sqrt(std::numeric_limits<Scalar>::epsilon()) * x.cwiseAbs().maxCoeff();
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar mag = std::abs(x(i));
    if (mag > cutoff) {
      x *= std::conj(x(i)) / mag;
      x(i) = std::complex<Scalar>(std::real(x(i)), Scalar(0));
      return;
    }
  }
}

}  // namespace detail

/// Finite spectrum via the Schur-complement reduction plus the kernel basis
/// of M for the n_phi infinite eigenvalues.
template <typename Scalar>
SpectrumResult<Scalar> solve_spectrum(const StructuredPencil<Scalar>& p,
                                      const Tolerances& tol = {}) {
  using Complex = std::complex<Scalar>;
  const Index n_u = p.n_u();
  const auto reduced = schur_reduce(p, tol);
  auto mass_lu = checked_lu(p.M_u(), tol.nonsingular, ErrorCode::SingularBlock, "M_u");
  const Matrix<Scalar> a = -mass_lu.solve(reduced.S);
  Eigen::EigenSolver<Matrix<Scalar>> es(a, true);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateSpectrum, "reduced eigensolver did not converge");
  }
  const ComplexVector<Scalar> values = es.eigenvalues();
  const ComplexMatrix<Scalar> vectors = es.eigenvectors();

  Scalar radius(0);
  for (Index i = 0; i < n_u; ++i) radius = std::max(radius, std::abs(values(i)));
  const Scalar real_cut = Scalar(100) * std::numeric_limits<Scalar>::epsilon() * radius;

  std::vector<Index> positive, negative, real;
  for (Index i = 0; i < n_u; ++i) {
    const Scalar im = values(i).imag();
    if (im > real_cut) {
      positive.push_back(i);
    } else if (im < -real_cut) {
      negative.push_back(i);
    } else {
      real.push_back(i);
    }
  }
  if (positive.size() != negative.size()) {
    throw Error(ErrorCode::DegenerateSpectrum, "finite spectrum is not conjugate-closed");
  }

  auto lift = [&](Index i) {
    ComplexVector<Scalar> x(p.n());
    x.head(n_u) = vectors.col(i);
    x.tail(p.n_phi()) = reduced.R.template cast<Complex>() * vectors.col(i);
    detail::normalize_eigenvector(x);
    return x;
  };

  // One unit per conjugate pair or real eigenvalue.
  struct Unit {
    Complex value;
    ComplexVector<Scalar> vector;
    bool pair;
  };
  std::vector<Unit> units;

  auto by_real_then_imag = [&](Index lhs, Index rhs) {
    if (values(lhs).real() != values(rhs).real()) return values(lhs).real() < values(rhs).real();
    return std::abs(values(lhs).imag()) < std::abs(values(rhs).imag());
  };
  std::sort(positive.begin(), positive.end(), by_real_then_imag);
  std::vector<bool> used(negative.size(), false);
  for (Index i : positive) {
    const Complex target = std::conj(values(i));
    Index best = -1;
    Scalar best_dist = std::numeric_limits<Scalar>::infinity();
    for (std::size_t j = 0; j < negative.size(); ++j) {
      if (used[j]) continue;
      const Scalar d = std::abs(values(negative[j]) - target);
      if (d < best_dist) {
        best_dist = d;
        best = static_cast<Index>(j);
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    units.push_back({values(i), lift(i), true});
  }
  for (Index i : real) {
    ComplexVector<Scalar> x = lift(i);
    x = x.real().template cast<Complex>();
    detail::normalize_eigenvector(x);
    units.push_back({Complex(values(i).real(), Scalar(0)), x, false});
  }
  std::stable_sort(units.begin(), units.end(), [](const Unit& lhs, const Unit& rhs) {
    if (lhs.value.real() != rhs.value.real()) return lhs.value.real() < rhs.value.real();
    return std::abs(lhs.value.imag()) < std::abs(rhs.value.imag());
  });

  SpectrumResult<Scalar> out;
  out.n_u = n_u;
  out.n_phi = p.n_phi();
  for (auto& u : units) {
    out.finite_pairs.push_back({u.value, u.vector});
    if (u.pair) out.finite_pairs.push_back({std::conj(u.value), u.vector.conjugate()});
  }
  out.infinite_basis = Matrix<Scalar>::Zero(p.n(), p.n_phi());
  out.infinite_basis.bottomRows(p.n_phi()).setIdentity();

  const Scalar floor = Scalar(tol.simplicity) * radius;
  out.margins.assign(out.finite_pairs.size(), std::numeric_limits<Scalar>::infinity());
  for (std::size_t i = 0; i < out.finite_pairs.size(); ++i) {
    const Complex li = out.finite_pairs[i].value;
    if (!(std::abs(li) > floor)) {
      throw Error(ErrorCode::DegenerateSpectrum,
                  "finite eigenvalue within tolerance of zero; eigenvalues must be nonzero");
    }
    for (std::size_t j = i + 1; j < out.finite_pairs.size(); ++j) {
      const Scalar d = std::abs(li - out.finite_pairs[j].value);
      out.margins[i] = std::min(out.margins[i], d);
      out.margins[j] = std::min(out.margins[j], d);
    }
    if (!(out.margins[i] > floor) && out.finite_pairs.size() > 1) {
      throw Error(ErrorCode::DegenerateSpectrum,
                  "finite eigenvalues are not simple (two within tolerance)");
    }
  }
  return out;
}

/// Candidate Jordan pair (X, J) with J = diag(J_1, 0), J_1 of order q
/// holding finite eigenvalues (real block form allowed).
template <typename Scalar>
struct JordanPairCandidate {
  Matrix<Scalar> X;
  Matrix<Scalar> J;
  Index q = 0;
};

/// Evaluates the finite, infinite, rank and block-form conditions that
/// characterize Jordan pairs of the pencil. Residuals are relative:
///   finite (q == m):  ||M X J + K X|| / ((||M|| ||J|| + ||K||) ||X||)
///   finite (q <  m):  ||M X + K X diag(J_1^{-1}, 0)|| / ((||M|| + ||K|| ||J_1^{-1}||) ||X||)
///   infinite:         ||M X_inf|| / (||M|| ||X_inf||)
///   block_form:       ||X(0:n_u, n_u:n)|| / ||X||   (only when m == n and q == n_u)
template <typename Scalar>
CheckReport check_jordan_pair(const StructuredPencil<Scalar>& p,
                              const JordanPairCandidate<Scalar>& c, double tol,
                              const Tolerances& tols = {}) {
  const Index n = p.n();
  const Index m = c.X.cols();
  if (c.X.rows() != n || c.J.rows() != m || c.J.cols() != m || c.q < 0 || c.q > m ||
      c.q > p.n_u()) {
    throw Error(ErrorCode::DimensionMismatch, "Jordan pair candidate does not fit the pencil");
  }
  const Index q = c.q;
  const Index z = m - q;
  CheckReport report;

  const Scalar j_norm = spectral_norm(c.J);
  Scalar off_block(0);
  if (z > 0) {
    off_block = c.J.bottomRows(z).norm() + c.J.topRightCorner(q, z).norm();
  }
  report.add_at_most("j_block_diagonal", static_cast<double>(off_block),
                     tol * std::max(static_cast<double>(j_norm), 1.0));

  const Scalar norm_m = p.norm_M();
  const Scalar norm_k = spectral_norm(p.K());
  const Scalar norm_x = spectral_norm(c.X);

  if (q > 0) {
    const Matrix<Scalar> j1 = c.J.topLeftCorner(q, q);
    const Scalar j1_rcond = reciprocal_condition(j1);
    report.add_at_least("j1_nonsingular", static_cast<double>(j1_rcond), tols.nonsingular);
    if (z == 0) {
      const Matrix<Scalar> r = p.apply_M(c.X) * c.J + p.K() * c.X;
      const Scalar scale = (norm_m * j_norm + norm_k) * norm_x;
      report.add_at_most("finite", static_cast<double>(spectral_norm(r) / scale), tol);
    } else if (j1_rcond >= tols.nonsingular) {
      Matrix<Scalar> jinv = Matrix<Scalar>::Zero(m, m);
      jinv.topLeftCorner(q, q) = j1.inverse();
      const Matrix<Scalar> r = p.apply_M(c.X) + p.K() * c.X * jinv;
      const Scalar scale = (norm_m + norm_k * spectral_norm(jinv)) * norm_x;
      report.add_at_most("finite", static_cast<double>(spectral_norm(r) / scale), tol);
    } else {
      report.add_at_most("finite", std::numeric_limits<double>::infinity(), tol);
    }
  }
  if (z > 0) {
    const Matrix<Scalar> x_inf = c.X.rightCols(z);
    const Scalar scale = norm_m * spectral_norm(x_inf);
    const Scalar r = scale > 0 ? spectral_norm(p.apply_M(x_inf)) / scale : Scalar(0);
    report.add_at_most("infinite", static_cast<double>(r), tol);
  }
  report.add_at_least("rank", static_cast<double>(singular_value_ratio(c.X)), tols.rank);
  if (m == n && q == p.n_u()) {
    const Scalar r = c.X.topRightCorner(p.n_u(), p.n_phi()).norm() / c.X.norm();
    report.add_at_most("block_form", static_cast<double>(r), tol);
  }
  return report;
}

}  // namespace spillfree
