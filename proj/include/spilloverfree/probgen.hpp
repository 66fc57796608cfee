#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spilloverfree/embedding.hpp"
#include "spilloverfree/linalg.hpp"
#include "spilloverfree/log.hpp"
#include "spilloverfree/pencil.hpp"
#include "spilloverfree/spectral.hpp"
#include "spilloverfree/types.hpp"

namespace spillfree {

struct ProblemSpec {
  Index n_u = 100;
  Index n_phi = 40;
  Index p = 6;
  /// Conjugate pairs among the replaced eigenvalues; negative means s_tilde.
  Index s = -1;
  Index s_tilde = 2;
  double max_perturbation = 0.3;
  std::uint64_t seed = 42;

  Index old_pairs() const { return s < 0 ? s_tilde : s; }
};

inline void validate_spec(const ProblemSpec& spec) {
  if (spec.n_u < 1 || spec.n_phi < 1) {
    throw Error(ErrorCode::Usage, "n_u and n_phi must be positive");
  }
  if (spec.p < 1 || spec.p > spec.n_u) throw Error(ErrorCode::Usage, "need 1 <= p <= n_u");
  if (spec.s_tilde < 0 || 2 * spec.s_tilde > spec.p || 2 * spec.old_pairs() > spec.p) {
    throw Error(ErrorCode::StructureInfeasible, "pair counts must satisfy 2 s <= p");
  }
  if (!(spec.max_perturbation >= 0)) {
    throw Error(ErrorCode::Usage, "max perturbation must be nonnegative");
  }
}

namespace detail {

inline std::uint64_t retry_seed(std::uint64_t seed, int attempt) {
  return seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL;
}

}  // namespace detail

/// Random admissible pencil: entries uniform on [-1, 1], symmetrized, then
/// n * diag(+-1) added to M_u and n * I to the diagonal of K_phi. The random
/// signs make M_u indefinite so the spectrum has complex pairs.
template <typename Scalar = double>
StructuredPencil<Scalar> generate_pencil(const ProblemSpec& spec, const Tolerances& tol = {},
                                         int max_attempts = 16) {
  validate_spec(spec);
  const Index n_u = spec.n_u, n_phi = spec.n_phi, n = n_u + n_phi;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::mt19937_64 rng(detail::retry_seed(spec.seed, attempt));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto draw = [&](Index rows, Index cols) {
      Matrix<Scalar> a(rows, cols);
      for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) a(i, j) = Scalar(unit(rng));
      }
      return a;
    };
    Matrix<Scalar> m_u = symmetrize(draw(n_u, n_u));
    for (Index i = 0; i < n_u; ++i) {
      m_u(i, i) += Scalar(n) * (unit(rng) < 0 ? Scalar(-1) : Scalar(1));
    }
    Matrix<Scalar> k = symmetrize(draw(n, n));
    k.bottomRightCorner(n_phi, n_phi).diagonal().array() += Scalar(n);
    try {
      StructuredPencil<Scalar> pencil = validate_pencil(m_u, k, n_u, n_phi, tol);
      solve_spectrum(pencil, tol);
      return pencil;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSpectrum && e.code() != ErrorCode::SingularBlock) throw;
      logger().info("generation attempt {} rejected: {}", attempt, e.what());
    }
  }
  throw Error(ErrorCode::GenerationFailed, "retry budget exhausted; choose another seed");
}

/// The s conjugate pairs and p - 2s real eigenvalues of smallest modulus,
/// each pair listed as (positive, conjugate).
template <typename Scalar>
std::vector<std::complex<Scalar>> pick_eigenvalues(const SpectrumResult<Scalar>& spectrum, Index p,
                                                   Index s) {
  std::vector<std::complex<Scalar>> pairs, reals;
  for (const auto& e : spectrum.finite_pairs) {
    if (e.value.imag() > 0) pairs.push_back(e.value);
    if (e.value.imag() == 0) reals.push_back(e.value);
  }
  const auto by_modulus = [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); };
  std::stable_sort(pairs.begin(), pairs.end(), by_modulus);
  std::stable_sort(reals.begin(), reals.end(), by_modulus);
  const Index want_real = p - 2 * s;
  if (s < 0 || want_real < 0 || static_cast<Index>(pairs.size()) < s ||
      static_cast<Index>(reals.size()) < want_real) {
    throw Error(ErrorCode::StructureInfeasible,
                "spectrum lacks the requested number of conjugate pairs or real eigenvalues");
  }
  std::vector<std::complex<Scalar>> out;
  for (Index j = 0; j < s; ++j) {
    out.push_back(pairs[j]);
    out.push_back(std::conj(pairs[j]));
  }
  for (Index j = 0; j < want_real; ++j) out.push_back(reals[j]);
  return out;
}

/// New eigenvalues for a replaced set. With an unchanged pair count each
/// value moves by at most `max_perturbation` (pairs stay in the upper half
/// plane). Otherwise fresh values are drawn in a box around the old ones.
/// Targets have modulus >= 1e-3, are mutually distinct and avoid `avoid`.
template <typename Scalar>
std::vector<std::complex<Scalar>> perturb_targets(std::span<const std::complex<Scalar>> old_eigs,
                                                  Index s_tilde, double max_perturbation,
                                                  std::uint64_t seed,
                                                  std::span<const std::complex<Scalar>> avoid = {}) {
  using Complex = std::complex<Scalar>;
  const Index count = static_cast<Index>(old_eigs.size());
  Index s_old = 0;
  Scalar radius(0);
  for (const auto& v : old_eigs) {
    if (v == Scalar(0)) throw Error(ErrorCode::ZeroEigenvalue, "old eigenvalues must be nonzero");
    if (v.imag() > 0) ++s_old;
    radius = std::max(radius, std::abs(v));
  }
  if (count < 1 || 2 * s_old > count || s_tilde < 0 || 2 * s_tilde > count) {
    throw Error(ErrorCode::StructureInfeasible, "pair count exceeds half the selection size");
  }
  {
    Index neg = 0;
    for (const auto& v : old_eigs) neg += v.imag() < 0;
    if (neg != s_old) throw Error(ErrorCode::NotConjugateClosed, "old eigenvalues not conjugate-closed");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Scalar delta(max_perturbation);
  const Scalar sep = std::max(Scalar(1e-8) * (radius + delta), Scalar(1e-12));
  std::vector<Complex> chosen;

  auto acceptable = [&](const Complex& c) {
    if (std::abs(c) < Scalar(1e-3)) return false;
    for (const auto& a : avoid) {
      if (std::abs(a - c) <= sep || std::abs(std::conj(a) - c) <= sep) return false;
    }
    for (const auto& a : chosen) {
      if (std::abs(a - c) <= sep || std::abs(std::conj(a) - c) <= sep) return false;
    }
    return true;
  };
  auto sample = [&](auto&& generate) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Complex c = generate();
      if (acceptable(c)) return c;
    }
    throw Error(ErrorCode::StructureInfeasible, "no admissible target value could be drawn");
  };

  std::vector<Complex> out;
  if (s_tilde == s_old) {
    for (const auto& v : old_eigs) {
      if (v.imag() < 0) continue;
      Complex c;
      if (delta == Scalar(0)) {
        c = v;
      } else if (v.imag() > 0) {
        c = sample([&] {
          const Scalar r = delta * std::sqrt(Scalar(unit(rng)));
          const Scalar t = Scalar(2 * 3.14159265358979323846) * Scalar(unit(rng));
          const Complex d = v + std::polar(r, t);
          return d.imag() > 0 ? d : Complex(Scalar(0), Scalar(0));
        });
      } else {
        c = sample([&] { return Complex(v.real() + delta * Scalar(2 * unit(rng) - 1), Scalar(0)); });
      }
      chosen.push_back(c);
      out.push_back(c);
      if (c.imag() > 0) out.push_back(std::conj(c));
    }
    // Pairs first, as in the old set.
    std::stable_partition(out.begin(), out.end(), [](const Complex& c) { return c.imag() != 0; });
    return out;
  }

  const Scalar box = radius + delta;
  for (Index j = 0; j < s_tilde; ++j) {
    const Complex c = sample([&] {
      return Complex(box * Scalar(2 * unit(rng) - 1), box * Scalar(unit(rng)));
    });
    chosen.push_back(c);
    out.push_back(c);
    out.push_back(std::conj(c));
  }
  for (Index j = 2 * s_tilde; j < count; ++j) {
    const Complex c = sample([&] { return Complex(box * Scalar(2 * unit(rng) - 1), Scalar(0)); });
    chosen.push_back(c);
    out.push_back(c);
  }
  return out;
}

/// A ready-to-embed problem: pencil, spectrum, replaced set and targets.
template <typename Scalar = double>
struct Problem {
  ProblemSpec spec;
  StructuredPencil<Scalar> pencil;
  SpectrumResult<Scalar> spectrum;
  Selection<Scalar> selection;
  std::vector<std::complex<Scalar>> targets;
  Matrix<Scalar> target_lambda;
  Index target_pairs = 0;
};

template <typename Scalar = double>
Problem<Scalar> make_problem(const ProblemSpec& spec, const Tolerances& tol = {}) {
  auto pencil = generate_pencil<Scalar>(spec, tol);
  auto spectrum = solve_spectrum(pencil, tol);
  const auto old_values = pick_eigenvalues(spectrum, spec.p, spec.old_pairs());
  auto selection = select_eigendata<Scalar>(spectrum, old_values, tol);
  std::vector<std::complex<Scalar>> retained;
  for (Index i : selection.retained) retained.push_back(spectrum.finite_pairs[i].value);
  const auto ordered = selection.old.block_values();
  std::vector<std::complex<Scalar>> old_list;
  for (const auto& v : ordered) {
    old_list.push_back(v);
    if (v.imag() > 0) old_list.push_back(std::conj(v));
  }
  auto targets = perturb_targets<Scalar>(old_list, spec.s_tilde, spec.max_perturbation,
                                         spec.seed ^ 0xA5A5A5A5A5A5A5A5ULL, retained);
  check_disjoint<Scalar>(spectrum, selection.retained, targets, tol);
  Index pairs = 0;
  Matrix<Scalar> lambda = real_block_form<Scalar>(targets, &pairs, nullptr, tol);
  return Problem<Scalar>{spec,         std::move(pencil),  std::move(spectrum),
                         std::move(selection), std::move(targets), std::move(lambda), pairs};
}

}  // namespace spillfree
