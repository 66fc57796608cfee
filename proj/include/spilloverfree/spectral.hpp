#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spilloverfree/linalg.hpp"
#include "spilloverfree/pencil.hpp"
#include "spilloverfree/types.hpp"

namespace spillfree {

/// Real representation of a conjugate-closed set of eigenpairs:
/// Lambda = diag([a_1 b_1; -b_1 a_1], ..., [a_s b_s; -b_s a_s], l_{2s+1}, ..., l_p)
/// with b_j > 0, and X = [x_1R, x_1I, ..., x_sR, x_sI, x_{2s+1}, ..., x_p].
/// The pairs satisfy M X Lambda + K X = 0.
template <typename Scalar = double>
struct RealSpectralData {
  Matrix<Scalar> Lambda;
  Matrix<Scalar> X;
  Index s = 0;

  Index p() const { return Lambda.rows(); }
  Index real_count() const { return p() - 2 * s; }

  /// Eigenvalues in block order, each pair listed once as a + b i.
  std::vector<std::complex<Scalar>> block_values() const {
    std::vector<std::complex<Scalar>> out;
    for (Index j = 0; j < s; ++j) out.emplace_back(Lambda(2 * j, 2 * j), Lambda(2 * j, 2 * j + 1));
    for (Index j = 2 * s; j < p(); ++j) out.emplace_back(Lambda(j, j), Scalar(0));
    return out;
  }
};

/// Throws MalformedBlocks unless Lambda has exactly the block layout above.
template <typename Scalar>
void check_block_structure(const Matrix<Scalar>& lambda, Index s) {
  const Index p = lambda.rows();
  if (lambda.cols() != p) throw Error(ErrorCode::MalformedBlocks, "Lambda is not square");
  if (s < 0 || 2 * s > p) throw Error(ErrorCode::MalformedBlocks, "pair count exceeds p/2");
  Matrix<Scalar> expected = Matrix<Scalar>::Zero(p, p);
  for (Index j = 0; j < s; ++j) {
    const Scalar a = lambda(2 * j, 2 * j);
    const Scalar b = lambda(2 * j, 2 * j + 1);
    if (!(b > 0)) {
      throw Error(ErrorCode::MalformedBlocks, "conjugate block with non-positive imaginary part");
    }
    expected.template block<2, 2>(2 * j, 2 * j) << a, b, -b, a;
  }
  for (Index j = 2 * s; j < p; ++j) expected(j, j) = lambda(j, j);
  const Scalar scale = std::max(lambda.cwiseAbs().maxCoeff(), Scalar(1));
  if ((lambda - expected).cwiseAbs().maxCoeff() > Scalar(16) * std::numeric_limits<Scalar>::epsilon() * scale) {
    throw Error(ErrorCode::MalformedBlocks, "Lambda is not in real block-diagonal form");
  }
}

template <typename Scalar>
void check_real_spectral(const RealSpectralData<Scalar>& d) {
  check_block_structure(d.Lambda, d.s);
  if (d.X.cols() != d.p()) {
    throw Error(ErrorCode::MalformedBlocks, "X column count differs from the order of Lambda");
  }
}

/// Real block form of a conjugate-closed list of eigenvalues. Pairs come
/// first in the order of their positive-imaginary members, then real
/// eigenvalues in input order. `order` receives, per unit, the input index of
/// the representative (positive-imaginary or real) member.
template <typename Scalar>
Matrix<Scalar> real_block_form(std::span<const std::complex<Scalar>> values, Index* s_out,
                               std::vector<Index>* order = nullptr,
                               const Tolerances& tol = {}) {
  const Index count = static_cast<Index>(values.size());
  Scalar radius(0);
  for (const auto& v : values) radius = std::max(radius, std::abs(v));
  const Scalar sep = Scalar(tol.simplicity) * radius;

  std::vector<Index> pairs, reals;
  std::vector<bool> used(values.size(), false);
  auto is_real = [&](Index i) {
    return std::abs(values[i].imag()) <= Scalar(tol.simplicity) * std::abs(values[i]);
  };
  for (Index i = 0; i < count; ++i) {
    if (!(std::abs(values[i]) > sep) || values[i] == std::complex<Scalar>(0)) {
      throw Error(ErrorCode::ZeroEigenvalue, "eigenvalues must be nonzero");
    }
  }
  for (Index i = 0; i < count; ++i) {
    if (is_real(i) || values[i].imag() < 0) continue;
    Index best = -1;
    Scalar best_dist = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < count; ++j) {
      if (used[j] || j == i || is_real(j) || values[j].imag() > 0) continue;
      const Scalar d = std::abs(values[j] - std::conj(values[i]));
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    const Scalar match_tol = std::max(Scalar(tol.simplicity) * std::abs(values[i]),
                                      Scalar(64) * std::numeric_limits<Scalar>::epsilon() * radius);
    if (best < 0 || best_dist > match_tol) {
      throw Error(ErrorCode::NotConjugateClosed, "eigenvalue without its conjugate partner");
    }
    used[i] = used[best] = true;
    pairs.push_back(i);
  }
  for (Index i = 0; i < count; ++i) {
    if (used[i]) continue;
    if (!is_real(i)) {
      throw Error(ErrorCode::NotConjugateClosed, "eigenvalue without its conjugate partner");
    }
    reals.push_back(i);
  }
  for (Index i = 0; i < count; ++i) {
    for (Index j = i + 1; j < count; ++j) {
      const bool partners = std::abs(values[i] - std::conj(values[j])) <= sep && !is_real(i);
      if (!partners && std::abs(values[i] - values[j]) <= sep) {
        throw Error(ErrorCode::DuplicateEigenvalue, "eigenvalues must be simple");
      }
    }
  }

  const Index s = static_cast<Index>(pairs.size());
  Matrix<Scalar> lambda = Matrix<Scalar>::Zero(count, count);
  for (Index j = 0; j < s; ++j) {
    const auto v = values[pairs[j]];
    lambda.template block<2, 2>(2 * j, 2 * j) << v.real(), v.imag(), -v.imag(), v.real();
  }
  for (std::size_t j = 0; j < reals.size(); ++j) {
    const Index k = 2 * s + static_cast<Index>(j);
    lambda(k, k) = values[reals[j]].real();
  }
  if (s_out) *s_out = s;
  if (order) {
    *order = pairs;
    order->insert(order->end(), reals.begin(), reals.end());
  }
  return lambda;
}

template <typename Scalar>
RealSpectralData<Scalar> to_real_representation(std::span<const Eigenpair<Scalar>> pairs,
                                                 const Tolerances& tol = {}) {
  using Complex = std::complex<Scalar>;
  std::vector<Complex> values;
  values.reserve(pairs.size());
  for (const auto& e : pairs) values.push_back(e.value);
  RealSpectralData<Scalar> out;
  std::vector<Index> order;
  out.Lambda = real_block_form<Scalar>(values, &out.s, &order, tol);
  const Index n = pairs.empty() ? 0 : pairs.front().vector.size();
  out.X.resize(n, out.p());
  for (Index j = 0; j < out.s; ++j) {
    const auto& x = pairs[order[j]].vector;
    if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "eigenvector lengths differ");
    out.X.col(2 * j) = x.real();
    out.X.col(2 * j + 1) = x.imag();
  }
  for (Index j = 2 * out.s; j < out.p(); ++j) {
    ComplexVector<Scalar> x = pairs[order[j - out.s]].vector;
    if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "eigenvector lengths differ");
    if (x.imag().norm() > std::numeric_limits<Scalar>::epsilon() * x.norm()) {
      Index k;
      x.cwiseAbs().maxCoeff(&k);
      x *= std::conj(x(k)) / std::abs(x(k));
    }
    out.X.col(j) = x.real();
  }
  return out;
}

template <typename Scalar>
std::vector<Eigenpair<Scalar>> from_real_representation(const RealSpectralData<Scalar>& d) {
  using Complex = std::complex<Scalar>;
  check_real_spectral(d);
  std::vector<Eigenpair<Scalar>> out;
  for (Index j = 0; j < d.s; ++j) {
    const Complex value(d.Lambda(2 * j, 2 * j), d.Lambda(2 * j, 2 * j + 1));
    ComplexVector<Scalar> x(d.X.rows());
    x.real() = d.X.col(2 * j);
    x.imag() = d.X.col(2 * j + 1);
    out.push_back({value, x});
    out.push_back({std::conj(value), x.conjugate()});
  }
  for (Index j = 2 * d.s; j < d.p(); ++j) {
    out.push_back({Complex(d.Lambda(j, j), Scalar(0)), d.X.col(j).template cast<Complex>()});
  }
  return out;
}

/// Selected eigendata to replace plus the indices (into the spectrum's
/// finite pairs) of everything retained.
template <typename Scalar>
struct Selection {
  RealSpectralData<Scalar> old;
  std::vector<Index> selected;
  std::vector<Index> retained;
};

namespace detail {

/// Canonical ordering: pairs by ascending real then imaginary part, then
/// real eigenvalues ascending.
template <typename Scalar>
std::vector<Eigenpair<Scalar>> canonical_order(const SpectrumResult<Scalar>& s,
                                               const std::vector<Index>& indices) {
  std::vector<Index> pairs, reals;
  for (Index i : indices) {
    const auto v = s.finite_pairs[i].value;
    if (v.imag() > 0) pairs.push_back(i);
    if (v.imag() == 0) reals.push_back(i);
  }
  std::sort(pairs.begin(), pairs.end(), [&](Index a, Index b) {
    const auto va = s.finite_pairs[a].value, vb = s.finite_pairs[b].value;
    if (va.real() != vb.real()) return va.real() < vb.real();
    return va.imag() < vb.imag();
  });
  std::sort(reals.begin(), reals.end(), [&](Index a, Index b) {
    return s.finite_pairs[a].value.real() < s.finite_pairs[b].value.real();
  });
  std::vector<Eigenpair<Scalar>> out;
  for (Index i : pairs) {
    out.push_back(s.finite_pairs[i]);
    out.push_back(s.finite_pairs[s.partner(i)]);
  }
  for (Index i : reals) out.push_back(s.finite_pairs[i]);
  return out;
}

}  // namespace detail

template <typename Scalar>
Selection<Scalar> select_eigendata(const SpectrumResult<Scalar>& spectrum,
                                   std::span<const std::complex<Scalar>> targets,
                                   const Tolerances& tol = {}) {
  const Index count = static_cast<Index>(spectrum.finite_pairs.size());
  std::vector<bool> chosen(spectrum.finite_pairs.size(), false);
  Selection<Scalar> out;
  for (const auto& t : targets) {
    const Scalar radius = std::abs(t) > 0 ? std::abs(t) : spectrum.spectral_radius();
    const Scalar window = Scalar(tol.match) * radius;
    std::vector<Index> hits;
    for (Index i = 0; i < count; ++i) {
      if (std::abs(spectrum.finite_pairs[i].value - t) <= window) hits.push_back(i);
    }
    if (hits.empty()) {
      throw Error(ErrorCode::NoMatch, "requested eigenvalue not found in the finite spectrum");
    }
    if (hits.size() > 1) {
      throw Error(ErrorCode::Overlap,
                  "requested eigenvalue coincides with more than one eigenvalue; the replaced "
                  "and retained sets must be disjoint");
    }
    if (chosen[hits.front()]) {
      throw Error(ErrorCode::DuplicateEigenvalue, "eigenvalue requested twice");
    }
    chosen[hits.front()] = true;
    out.selected.push_back(hits.front());
  }
  for (Index i : out.selected) {
    if (!chosen[spectrum.partner(i)]) {
      throw Error(ErrorCode::NotConjugateClosed,
                  "selection splits a conjugate pair; the replaced set must be conjugate-closed");
    }
  }
  if (out.selected.empty()) {
    throw Error(ErrorCode::NoMatch, "empty selection");
  }
  for (Index i = 0; i < count; ++i) {
    if (!chosen[i]) out.retained.push_back(i);
  }
  std::sort(out.selected.begin(), out.selected.end());
  const auto ordered = detail::canonical_order(spectrum, out.selected);
  out.old = to_real_representation<Scalar>(ordered, tol);
  return out;
}

/// Real representation (Lambda_3, finite part of X_2) of the retained pairs.
template <typename Scalar>
RealSpectralData<Scalar> retained_eigendata(const SpectrumResult<Scalar>& spectrum,
                                            const std::vector<Index>& retained,
                                            const Tolerances& tol = {}) {
  if (retained.empty()) {
    RealSpectralData<Scalar> empty;
    empty.Lambda.resize(0, 0);
    empty.X.resize(spectrum.n_u + spectrum.n_phi, 0);
    return empty;
  }
  const auto ordered = detail::canonical_order(spectrum, retained);
  return to_real_representation<Scalar>(ordered, tol);
}

/// Full real Jordan pair ([X_F, X_inf], diag(Lambda_F, 0)) with q = n_u.
template <typename Scalar>
JordanPairCandidate<Scalar> real_jordan_pair(const SpectrumResult<Scalar>& spectrum,
                                             const Tolerances& tol = {}) {
  std::vector<Index> all(spectrum.finite_pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  const auto finite = retained_eigendata(spectrum, all, tol);
  const Index n = spectrum.n_u + spectrum.n_phi;
  JordanPairCandidate<Scalar> c;
  c.q = spectrum.n_u;
  c.X.resize(n, n);
  c.X << finite.X, spectrum.infinite_basis;
  c.J = Matrix<Scalar>::Zero(n, n);
  c.J.topLeftCorner(c.q, c.q) = finite.Lambda;
  return c;
}

/// Throws Overlap when a new eigenvalue coincides with a retained one.
template <typename Scalar>
void check_disjoint(const SpectrumResult<Scalar>& spectrum, const std::vector<Index>& retained,
                    std::span<const std::complex<Scalar>> new_values, const Tolerances& tol = {}) {
  const Scalar sep = Scalar(tol.simplicity) * spectrum.spectral_radius();
  for (const auto& v : new_values) {
    for (Index i : retained) {
      if (std::abs(spectrum.finite_pairs[i].value - v) <= sep) {
        throw Error(ErrorCode::Overlap,
                    "new eigenvalue coincides with a retained eigenvalue; the sets must be "
                    "disjoint");
      }
    }
  }
}

}  // namespace spillfree
