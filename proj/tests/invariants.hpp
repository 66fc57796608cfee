#pragma once

// Property checks for every module. Each returns a named result so the unit
// tests and the acceptance run share one implementation.

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracle.hpp"
#include "result.hpp"
#include "scenarios.hpp"
#include "spilloverfree/embedding.hpp"
#include "spilloverfree/io.hpp"
#include "spilloverfree/objective.hpp"
#include "spilloverfree/pencil.hpp"
#include "spilloverfree/probgen.hpp"
#include "spilloverfree/spectral.hpp"

namespace invariants {

using namespace spillfree;
using Mat = Eigen::MatrixXd;
using Cplx = std::complex<double>;


inline StructuredPencil<double> small_pencil(std::uint64_t seed, Index max_n_u = 5,
                                             Index max_n_phi = 3) {
  std::mt19937_64 rng(seed);
  ProblemSpec spec;
  spec.n_u = 2 + static_cast<Index>(rng() % static_cast<std::uint64_t>(max_n_u - 1));
  spec.n_phi = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(max_n_phi));
  spec.p = 1;
  spec.s = 0;
  spec.s_tilde = 0;
  spec.seed = seed;
  return generate_pencil<double>(spec);
}

// ---------------------------------------------------------------- pencil-core

inline Result schur_equivalence() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = small_pencil(seed);
    const auto red = schur_reduce(p);
    const Mat m = oracle::full_mass(p.M_u(), p.n());
    const Cplx det_phi = Mat(p.K_phi()).determinant();
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
      const Cplx lambda(u(rng), u(rng));
      const Cplx full = oracle::pencil_det(m, p.K(), lambda);
      const Eigen::MatrixXcd reduced = lambda * p.M_u().cast<Cplx>() + red.S.cast<Cplx>();
      const Cplx factored = det_phi * reduced.partialPivLu().determinant();
      worst = std::max(worst, std::abs(full - factored) / std::max(std::abs(full), std::abs(factored)));
    }
  }
  return make("schur_equivalence", worst <= 1e-10, fmt::format("max relative gap {:.3e}", worst));
}

inline Result spectrum_completeness() {
  double worst = 0;
  bool counts = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = small_pencil(seed, 8, 4);
    const auto spec = solve_spectrum(p);
    counts = counts && static_cast<Index>(spec.finite_pairs.size()) == p.n_u();
    std::vector<Cplx> values;
    for (const auto& e : spec.finite_pairs) values.push_back(e.value);
    const auto dense = oracle::qz_spectrum(oracle::full_mass(p.M_u(), p.n()), p.K());
    worst = std::max(worst, oracle::multiset_distance(values, dense.finite));
  }
  return make("spectrum_completeness", counts && worst <= 1e-8,
              fmt::format("counts ok={} max distance {:.3e}", counts, worst));
}

inline Result conjugate_closure() {
  double worst = 0;
  bool structure = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = small_pencil(seed, 8, 4);
    const auto spec = solve_spectrum(p);
    for (Index i = 0; i < static_cast<Index>(spec.finite_pairs.size()); ++i) {
      const auto& e = spec.finite_pairs[i];
      if (e.value.imag() == 0) continue;
      const Index j = spec.partner(i);
      if (j < 0 || j >= static_cast<Index>(spec.finite_pairs.size())) {
        structure = false;
        continue;
      }
      const auto& f = spec.finite_pairs[j];
      structure = structure && f.value == std::conj(e.value) && (e.value.imag() > 0) == (i < j);
      worst = std::max(worst, (f.vector - e.vector.conjugate()).norm());
    }
  }
  return make("conjugate_closure", structure && worst <= 1e-10,
              fmt::format("adjacent positive-first={} max vector gap {:.3e}", structure, worst));
}

inline Result infinite_basis() {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = small_pencil(seed, 8, 4);
    const auto spec = solve_spectrum(p);
    ok = ok && spec.infinite_basis.cols() == p.n_phi() &&
         p.apply_M(spec.infinite_basis).isZero(0.0) &&
         spec.infinite_basis.topRows(p.n_u()).isZero(0.0) &&
         spec.infinite_basis.bottomRows(p.n_phi()).isIdentity(0.0);
  }
  return make("infinite_basis", ok, ok ? "M [0; I] == 0 exactly" : "nonzero M * basis");
}

inline Result jordan_pairs_pass() {
  int failed = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = seed % 2 ? small_pencil(seed, 8, 4) : small_pencil(seed, 30, 10);
    const auto spec = solve_spectrum(p);
    const auto report = check_jordan_pair(p, real_jordan_pair(spec), 1e-10);
    failed += !report.passed();
    if (const auto* c = report.find("finite")) worst = std::max(worst, c->value);
  }
  return make("jordan_pairs_pass", failed == 0,
              fmt::format("{} of 20 failed, max finite residual {:.3e}", failed, worst));
}

/// check_jordan_pair flags each deliberately broken condition.
inline Result jordan_violations_detected() {
  const Mat m_u = Mat::Identity(2, 2);
  Mat k = Mat::Zero(3, 3);
  k.diagonal() << 1, 2, 1;
  const StructuredPencil<double> p(m_u, k, 2, 1);
  JordanPairCandidate<double> good{Mat::Identity(3, 3), Mat::Zero(3, 3), 2};
  good.J(0, 0) = -1;
  good.J(1, 1) = -2;
  std::vector<std::string> missed;
  auto expect_fail = [&](const JordanPairCandidate<double>& c, const char* cond) {
    const auto r = check_jordan_pair(p, c, 1e-10);
    const auto* check = r.find(cond);
    if (!check || check->passed) missed.emplace_back(cond);
  };
  if (!check_jordan_pair(p, good, 1e-10).passed()) missed.emplace_back("baseline");

  auto c = good;
  c.X(0, 2) = 0.5;
  expect_fail(c, "block_form");
  c = good;
  c.X(0, 0) += 0.3;
  c.X(1, 0) += 0.3;
  expect_fail(c, "finite");
  c = good;
  c.X(0, 2) = 1.0;
  expect_fail(c, "infinite");
  c = good;
  c.X.col(1) = c.X.col(0);
  expect_fail(c, "rank");
  c = good;
  c.J(0, 2) = 1.0;
  expect_fail(c, "j_block_diagonal");
  c = good;
  c.J(1, 1) = 0.0;
  expect_fail(c, "j1_nonsingular");
  // Pure infinite candidate [0; I] with J = 0 passes.
  JordanPairCandidate<double> inf{Mat::Zero(3, 1), Mat::Zero(1, 1), 0};
  inf.X(2, 0) = 1.0;
  if (!check_jordan_pair(p, inf, 1e-10).passed()) missed.emplace_back("kernel candidate");

  std::string detail = missed.empty() ? "all violations flagged" : "missed:";
  for (const auto& s : missed) detail += " " + s;
  return make("jordan_violations_detected", missed.empty(), detail);
}

// -------------------------------------------------------------- spectral-real

inline Result real_round_trip() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index p = 1 + static_cast<Index>(rng() % 8);
    const Index s = static_cast<Index>(rng() % static_cast<std::uint64_t>(p / 2 + 1));
    const Index n = p + 2 + static_cast<Index>(rng() % 4);
    std::vector<Eigenpair<double>> pairs;
    for (Index j = 0; j < s; ++j) {
      const Cplx v(u(rng), 0.1 + std::abs(u(rng)));
      ComplexVector<double> x(n);
      for (Index i = 0; i < n; ++i) x(i) = Cplx(u(rng), u(rng));
      pairs.push_back({v, x});
      pairs.push_back({std::conj(v), x.conjugate()});
    }
    for (Index j = 2 * s; j < p; ++j) {
      const double v = (j + 1) * 0.25 * (j % 2 ? -1 : 1);
      ComplexVector<double> x(n);
      for (Index i = 0; i < n; ++i) x(i) = Cplx(u(rng), 0.0);
      pairs.push_back({Cplx(v, 0), x});
    }
    const auto d = to_real_representation<double>(pairs);
    const auto back = from_real_representation(d);
    if (back.size() != pairs.size()) return make("real_round_trip", false, "size changed");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      worst = std::max(worst, std::abs(back[i].value - pairs[i].value));
      worst = std::max(worst, (back[i].vector - pairs[i].vector).cwiseAbs().maxCoeff());
    }
    const auto again = to_real_representation<double>(back);
    worst = std::max(worst, (again.Lambda - d.Lambda).cwiseAbs().maxCoeff());
    worst = std::max(worst, (again.X - d.X).cwiseAbs().maxCoeff());
    if (again.s != d.s || d.p() != 2 * d.s + d.real_count()) {
      return make("real_round_trip", false, "block count changed");
    }
  }
  return make("real_round_trip", worst <= 1e-14, fmt::format("max deviation {:.3e}", worst));
}

inline Result real_eigen_relation() {
  double worst = 0;
  bool counts = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto prob = scenarios::small_problem(seed, 1 + static_cast<Index>(seed % 4));
    const auto& d = prob.selection.old;
    const Mat m = oracle::full_mass(prob.pencil.M_u(), prob.pencil.n());
    const Mat linv = d.Lambda.inverse();
    const Mat r = m * d.X + prob.pencil.K() * d.X * linv;
    const double scale =
        (oracle::norm2(m) + oracle::norm2(prob.pencil.K()) * oracle::norm2(linv)) * oracle::norm2(d.X);
    worst = std::max(worst, oracle::norm2(r) / scale);
    Index ones = 0;
    for (Index j = 2 * d.s; j < d.p(); ++j) ones += 1;
    counts = counts && d.p() == 2 * d.s + ones && d.p() == prob.spec.p;
  }
  return make("real_eigen_relation", worst <= 1e-12 && counts,
              fmt::format("max residual {:.3e}, block counts ok={}", worst, counts));
}

// ------------------------------------------------------------------ embedding

inline double rel(const Mat& a, const Mat& b) { return oracle::norm2(Mat(a - b)) / oracle::norm2(b); }

inline Result no_spillover() {
  double worst = 0;
  bool kernel = true;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto prob = seed <= 2 ? make_problem<double>(scenarios::example1(seed))
                                : scenarios::small_problem(seed, 1 + static_cast<Index>(seed % 4));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    const auto u = e.apply(default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde()));
    const Mat m = oracle::full_mass(u.M_u_tilde, prob.pencil.n());
    const auto ret = scenarios::retained(prob);
    const double l2 = ret.p() > 0 ? oracle::norm2(Mat(ret.Lambda.inverse())) : 0.0;
    const double nm = oracle::norm2(m), nk = oracle::norm2(u.K_tilde);
    for (Index i : prob.selection.retained) {
      const auto& pr = prob.spectrum.finite_pairs[i];
      const Eigen::VectorXcd r = m.cast<Cplx>() * pr.vector + u.K_tilde.cast<Cplx>() * pr.vector / pr.value;
      worst = std::max(worst, r.norm() / ((nm + nk * l2) * pr.vector.norm()));
    }
    kernel = kernel && apply_mass(u.M_u_tilde, prob.spectrum.infinite_basis).isZero(0.0);
  }
  return make("no_spillover", worst <= 1e-10 && kernel,
              fmt::format("max retained residual {:.3e}, kernel exact={}", worst, kernel));
}

inline Result replacement_spectrum() {
  double worst = 0;
  int infinite_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto prob = scenarios::small_problem(seed + 50, 1 + static_cast<Index>(seed % 4));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    const auto u = e.apply(default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde()));
    const auto dense = oracle::qz_spectrum(oracle::full_mass(u.M_u_tilde, prob.pencil.n()), u.K_tilde);
    worst = std::max(worst, oracle::multiset_distance(dense.finite, scenarios::expected_spectrum(prob)));
    infinite_mismatch += dense.infinite != prob.pencil.n_phi();
  }
  return make("replacement_spectrum", worst <= 1e-8 && infinite_mismatch == 0,
              fmt::format("max distance {:.3e}, infinite count mismatches {}", worst,
                          infinite_mismatch));
}

inline Result new_eigenvectors() {
  double worst_res = 0, worst_gap = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto prob = seed <= 2 ? make_problem<double>(scenarios::example1(seed))
                                : scenarios::small_problem(seed, 1 + static_cast<Index>(seed % 4));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    auto ps = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
    std::mt19937_64 rng(seed);
    ps.theta = Mat::Identity(e.p(), e.p()) + 0.3 * oracle::random_symmetric(e.p(), rng);
    ps.theta(0, e.p() - 1) += 0.2;
    ps.mode = GammaChoice::Custom;
    const auto u = e.apply(ps);
    const Mat m = oracle::full_mass(u.M_u_tilde, prob.pencil.n());
    const Mat linv = prob.target_lambda.inverse();
    const Mat r = m * u.X1_tilde + u.K_tilde * u.X1_tilde * linv;
    const double scale = (oracle::norm2(m) + oracle::norm2(u.K_tilde) * oracle::norm2(linv)) *
                         oracle::norm2(u.X1_tilde);
    worst_res = std::max(worst_res, oracle::norm2(r) / scale);
    worst_gap = std::max(worst_gap, oracle::subspace_gap(u.X1_tilde, prob.selection.old.X));
  }
  return make("new_eigenvectors", worst_res <= 1e-10 && worst_gap <= 1e-10,
              fmt::format("max residual {:.3e}, max subspace gap {:.3e}", worst_res, worst_gap));
}

inline Result update_symmetry() {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto prob = scenarios::small_problem(seed, 2);
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    const auto ps = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
    for (Method m : {Method::Direct, Method::Smw}) {
      const auto u = e.apply(ps, m);
      ok = ok && u.M_u_tilde == u.M_u_tilde.transpose() && u.K_tilde == u.K_tilde.transpose() &&
           u.M_u_tilde.rows() == prob.pencil.n_u();
    }
  }
  return make("update_symmetry", ok, ok ? "exactly symmetric" : "asymmetric output");
}

inline Result method_equivalence() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto prob = seed % 4 == 0 ? make_problem<double>(scenarios::example1(seed + 300))
                                    : scenarios::small_problem(seed + 200, 1 + static_cast<Index>(seed % 4));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    const auto ps = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
    const auto d = e.apply(ps, Method::Direct);
    const auto s = e.apply(ps, Method::Smw);
    worst = std::max({worst, rel(d.M_u_tilde, s.M_u_tilde), rel(d.K_tilde, s.K_tilde)});
  }
  return make("method_equivalence", worst <= 1e-10, fmt::format("max relative gap {:.3e}", worst));
}

inline Result identity_embedding() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto prob = seed <= 2 ? make_problem<double>(scenarios::example1(seed))
                                : scenarios::small_problem(seed, 1 + static_cast<Index>(seed % 4));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.selection.old.Lambda);
    const auto ps = default_gamma_tilde(e.gamma1(), e.s(), e.s());
    for (Method m : {Method::Direct, Method::Smw}) {
      const auto u = e.apply(ps, m);
      worst = std::max({worst, rel(u.M_u_tilde, prob.pencil.M_u()), rel(u.K_tilde, prob.pencil.K())});
    }
  }
  return make("identity_embedding", worst <= 1e-12, fmt::format("max relative change {:.3e}", worst));
}

inline Result theorem1_round_trip() {
  int failed = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = small_pencil(seed + 400, 8, 4);
    const auto pair = real_jordan_pair(solve_spectrum(p));
    const Index n_u = p.n_u(), n_phi = p.n_phi();
    const Mat x_fu = pair.X.topLeftCorner(n_u, n_u);
    const Mat gamma11 = symmetrize(Mat(x_fu.transpose() * p.M_u() * x_fu));
    const Mat j1 = pair.J.topLeftCorner(n_u, n_u).inverse();
    for (double k22 : {1.0, 3.0}) {
      const auto rebuilt = reconstruct_theorem1<double>(pair.X, j1, gamma11, Mat::Identity(n_phi, n_phi),
                                                        Mat(k22 * Mat::Identity(n_phi, n_phi)));
      const auto r = check_jordan_pair(rebuilt, pair, 1e-10);
      failed += !r.passed();
      worst = std::max(worst, r.find("finite")->value);
    }
  }
  return make("theorem1_round_trip", failed == 0,
              fmt::format("{} failures, max finite residual {:.3e}", failed, worst));
}

// ------------------------------------------------------------- objective-opt

inline Result optimizer_properties() {
  std::vector<std::string> bad;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto prob = make_problem<double>(seed == 3 ? scenarios::example2(seed) : scenarios::example1(seed));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    const auto seed_ps = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
    const auto res = optimize_gamma_tilde(e, seed_ps);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
      if (res.trace[i] > res.trace[i - 1]) {
        bad.push_back(fmt::format("seed {} trace increases", seed));
        break;
      }
    }
    const double slack = 1e-12 * std::max(1.0, res.best_rec_mk);
    if (!res.trace.empty() && res.best_rec_mk > res.trace.back() + slack) {
      bad.push_back(fmt::format("seed {} best above trace", seed));
    }
    if (res.baseline_rec_mk && res.best_rec_mk > *res.baseline_rec_mk + slack) {
      bad.push_back(fmt::format("seed {} worse than baseline", seed));
    }
    try {
      validate_parameters(res.best_params, prob.target_lambda);
    } catch (const Error&) {
      bad.push_back(fmt::format("seed {} invalid parameters", seed));
    }
    const auto again = e.apply(res.best_params, res.best_system.method);
    const double rerun = rec_mk(prob.pencil, again);
    if (std::abs(rerun - res.best_rec_mk) > 1e-12 * std::max(1.0, res.best_rec_mk)) {
      bad.push_back(fmt::format("seed {} rerun differs", seed));
    }
    const auto rr = residual_report(prob.pencil, again, prob.selection.old, prob.target_lambda,
                                    std::optional(scenarios::retained(prob)));
    if (!(rr.res1_updated <= 1e-10 && *rr.res2_updated <= 1e-10)) {
      bad.push_back(fmt::format("seed {} residuals {:.2e} {:.2e}", seed, rr.res1_updated, *rr.res2_updated));
    }
  }
  std::string detail = bad.empty() ? "monotone, bounded by baseline, reproducible" : "";
  for (const auto& b : bad) detail += b + "; ";
  return make("optimizer_properties", bad.empty(), detail);
}

inline Result objective_purity() {
  const auto prob = make_problem<double>(scenarios::example1(5));
  const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
  auto ps = default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde());
  ps.gamma_tilde = gamma_tilde_from_params(Vector<double>(Vector<double>::LinSpaced(6, 1.0, 2.0)), 2);
  ps.mode = GammaChoice::ChoiceB;
  const double a = rec_mk(prob.pencil, e.apply(ps));
  const double b = rec_mk(prob.pencil, e.apply(ps));
  const auto n1 = e.update_norms(ps);
  const auto n2 = e.update_norms(ps);
  const bool ok = a == b && n1 == n2;
  return make("objective_purity", ok, fmt::format("rec_mk {:.17g} vs {:.17g}", a, b));
}

inline Mat stored_round_trip(const Mat& a) {
  std::stringstream text;
  format_matrix(text, a, MatrixSymmetry::Symmetric);
  return parse_matrix(text, "stored");
}

inline Result residual_report_consistency() {
  bool ok = true;
  double worst = 0, oracle_gap = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto prob = make_problem<double>(scenarios::example1(seed));
    const Embedder<double> e(prob.pencil, prob.selection.old, prob.target_lambda);
    const auto u = e.apply(default_gamma_tilde(e.gamma1(), e.s(), e.s_tilde()));
    const auto rr = residual_report(prob.pencil, u, prob.selection.old, prob.target_lambda,
                                    std::optional(scenarios::retained(prob)), 0.5, 2.0);
    for (double v : {rr.res1_original, rr.res1_updated, *rr.res2_original, *rr.res2_updated, rr.rec_mk}) {
      ok = ok && std::isfinite(v) && v >= 0;
    }
    // Stored matrices are written with 17 significant digits and read back.
    const Mat m_back = stored_round_trip(u.M_u_tilde);
    const Mat k_back = stored_round_trip(u.K_tilde);
    UpdatedSystem<double> stored = u;
    stored.M_u_tilde = m_back;
    stored.K_tilde = k_back;
    const double from_disk = rec_mk(prob.pencil, stored, 0.5, 2.0);
    worst = std::max(worst, std::abs(from_disk - rr.rec_mk) / std::max(1.0, rr.rec_mk));
    // Independent SVD norms agree up to the accuracy of the decompositions.
    const double oracle_value = 0.5 * rel(m_back, prob.pencil.M_u()) + 2.0 * rel(k_back, prob.pencil.K());
    oracle_gap = std::max(oracle_gap, std::abs(oracle_value - rr.rec_mk) / std::max(1.0, rr.rec_mk));
  }
  return make("residual_report_consistency", ok && worst <= 1e-14 && oracle_gap <= 1e-12,
              fmt::format("finite and nonnegative={}, max recompute gap {:.3e}, oracle gap {:.3e}",
                          ok, worst, oracle_gap));
}

// -------------------------------------------------------------------- probgen

inline Result target_closure() {
  std::vector<std::string> bad;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto prob = make_problem<double>(seed % 2 ? scenarios::example1(seed) : scenarios::example2(seed));
    const auto& t = prob.targets;
    Index pairs = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::abs(t[i]) < 1e-3) bad.push_back(fmt::format("seed {} tiny target", seed));
      if (t[i].imag() > 0) {
        ++pairs;
        if (i + 1 >= t.size() || t[i + 1] != std::conj(t[i])) bad.push_back(fmt::format("seed {} open pair", seed));
      }
    }
    if (pairs != prob.spec.s_tilde) bad.push_back(fmt::format("seed {} pair count", seed));
    if (prob.spec.s_tilde == prob.spec.old_pairs()) {
      const auto old = prob.selection.old.block_values();
      const auto fresh = RealSpectralData<double>{prob.target_lambda, Mat(0, prob.spec.p), prob.target_pairs}.block_values();
      for (std::size_t i = 0; i < old.size(); ++i) {
        if (std::abs(old[i] - fresh[i]) > prob.spec.max_perturbation) {
          bad.push_back(fmt::format("seed {} perturbation too large", seed));
        }
      }
    }
  }
  std::string detail = bad.empty() ? "closed, nonzero, structured, bounded" : "";
  for (const auto& b : bad) detail += b + "; ";
  return make("target_closure", bad.empty(), detail);
}

inline Result generation_determinism() {
  const auto spec = scenarios::example1(77);
  const auto a = generate_pencil<double>(spec);
  const auto b = generate_pencil<double>(spec);
  const auto pa = make_problem<double>(spec);
  const auto pb = make_problem<double>(spec);
  const bool ok = a.M_u() == b.M_u() && a.K() == b.K() && pa.targets == pb.targets &&
                  pa.target_lambda == pb.target_lambda;
  return make("generation_determinism", ok, ok ? "bit-identical" : "outputs differ");
}

inline Result generation_success_rate() {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    try {
      generate_pencil<double>(scenarios::example1(seed), {}, 1);
      ++ok;
    } catch (const Error&) {
    }
  }
  return make("generation_success_rate", ok >= 95, fmt::format("{} of 100 seeds on first draw", ok));
}

}  // namespace invariants

#include "cli_checks.hpp"

namespace invariants {

inline std::vector<Result> run_all() {
  std::vector<Result> out = {
      schur_equivalence(),      spectrum_completeness(),     conjugate_closure(),
      infinite_basis(),         jordan_pairs_pass(),         jordan_violations_detected(),
      real_round_trip(),        real_eigen_relation(),       no_spillover(),
      replacement_spectrum(),   new_eigenvectors(),          update_symmetry(),
      method_equivalence(),     identity_embedding(),        theorem1_round_trip(),
      optimizer_properties(),   objective_purity(),          residual_report_consistency(),
      target_closure(),         generation_determinism(),    generation_success_rate(),
  };
  for (auto& r : cli_properties()) out.push_back(std::move(r));
  return out;
}

}  // namespace invariants
