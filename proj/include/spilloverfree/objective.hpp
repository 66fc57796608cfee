#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spilloverfree/embedding.hpp"
#include "spilloverfree/linalg.hpp"
#include "spilloverfree/log.hpp"
#include "spilloverfree/nelder_mead.hpp"
#include "spilloverfree/pencil.hpp"
#include "spilloverfree/spectral.hpp"
#include "spilloverfree/types.hpp"

namespace spillfree {

/// Relative residual of M X Lambda + K X = 0:
///   ||M X Lambda + K X|| / ((||M|| ||Lambda|| + ||K||) ||X||), spectral norms.
template <typename Scalar>
Scalar eigen_residual(const Matrix<Scalar>& m_u, const Matrix<Scalar>& k, const Matrix<Scalar>& x,
                      const Matrix<Scalar>& lambda) {
  if (x.rows() != k.rows() || x.cols() != lambda.rows() || m_u.rows() > k.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "eigendata does not fit the pencil");
  }
  if (x.cols() == 0) return Scalar(0);
  const Matrix<Scalar> r = apply_mass(m_u, Matrix<Scalar>(x * lambda)) + k * x;
  const Scalar scale =
      (spectral_norm(m_u) * spectral_norm(lambda) + spectral_norm(k)) * spectral_norm(x);
  return spectral_norm(r) / scale;
}

/// Relative residual of the retained data in inverted form,
///   ||M X_2 + K X_2 L|| / ((||M|| + ||K|| ||L||) ||X_2||),  L = diag(Lambda_3^{-1}, 0),
/// where X_2 is the finite retained block followed by the kernel basis of M.
template <typename Scalar>
Scalar retained_residual(const Matrix<Scalar>& m_u, const Matrix<Scalar>& k,
                         const RealSpectralData<Scalar>& retained) {
  const Index n = k.rows();
  const Index n_u = m_u.rows();
  const Index n_phi = n - n_u;
  const Index q = retained.p();
  if (retained.X.rows() != n || retained.X.cols() != q) {
    throw Error(ErrorCode::DimensionMismatch, "retained eigendata does not fit the pencil");
  }
  Matrix<Scalar> x2(n, q + n_phi);
  x2.leftCols(q) = retained.X;
  x2.rightCols(n_phi).setZero();
  x2.bottomRightCorner(n_phi, n_phi).setIdentity();
  Matrix<Scalar> l = Matrix<Scalar>::Zero(q + n_phi, q + n_phi);
  if (q > 0) {
    l.topLeftCorner(q, q) = checked_inverse(Matrix<Scalar>(retained.Lambda), 1e-300,
                                            ErrorCode::ZeroEigenvalue, "Lambda_3");
  }
  const Matrix<Scalar> r = apply_mass(m_u, x2) + k * x2 * l;
  const Scalar scale = (spectral_norm(m_u) + spectral_norm(k) * spectral_norm(l)) * spectral_norm(x2);
  return spectral_norm(r) / scale;
}

/// tau1 ||M_u - M~_u|| / ||M_u|| + tau2 ||K - K~|| / ||K||.
template <typename Scalar>
Scalar rec_mk(const StructuredPencil<Scalar>& p, const UpdatedSystem<Scalar>& u, double tau1 = 1.0,
              double tau2 = 1.0) {
  if (u.M_u_tilde.rows() != p.n_u() || u.K_tilde.rows() != p.n()) {
    throw Error(ErrorCode::DimensionMismatch, "updated system does not match the pencil");
  }
  const Scalar dm = spectral_norm(Matrix<Scalar>(p.M_u() - u.M_u_tilde)) / p.norm_M();
  const Scalar dk = spectral_norm(Matrix<Scalar>(p.K() - u.K_tilde)) / spectral_norm(p.K());
  return Scalar(tau1) * dm + Scalar(tau2) * dk;
}

template <typename Scalar = double>
struct ResidualReport {
  Scalar res1_original{};
  Scalar res1_updated{};
  std::optional<Scalar> res2_original;
  std::optional<Scalar> res2_updated;
  Scalar rec_mk{};
  double tau1 = 1.0;
  double tau2 = 1.0;
  Method method = Method::Smw;
  GammaChoice mode = GammaChoice::Custom;
};

/// Res2 fields are filled only when the retained eigendata is supplied.
template <typename Scalar>
ResidualReport<Scalar> residual_report(const StructuredPencil<Scalar>& p,
                                       const UpdatedSystem<Scalar>& u,
                                       const RealSpectralData<Scalar>& old,
                                       const Matrix<Scalar>& target_lambda,
                                       const std::optional<RealSpectralData<Scalar>>& retained,
                                       double tau1 = 1.0, double tau2 = 1.0) {
  if (!(tau1 > 0) || !(tau2 > 0)) {
    throw Error(ErrorCode::Usage, "weights tau1 and tau2 must be positive");
  }
  if (u.X1_tilde.cols() != target_lambda.rows() || old.X.rows() != p.n()) {
    throw Error(ErrorCode::DimensionMismatch, "eigendata does not fit the pencil");
  }
  ResidualReport<Scalar> r;
  r.tau1 = tau1;
  r.tau2 = tau2;
  r.method = u.method;
  r.mode = u.params.mode;
  r.res1_original = eigen_residual(p.M_u(), p.K(), old.X, old.Lambda);
  r.res1_updated = eigen_residual(u.M_u_tilde, u.K_tilde, u.X1_tilde, target_lambda);
  if (retained) {
    r.res2_original = retained_residual(p.M_u(), p.K(), *retained);
    r.res2_updated = retained_residual(u.M_u_tilde, u.K_tilde, *retained);
  }
  r.rec_mk = rec_mk(p, u, tau1, tau2);
  return r;
}

struct OptimizerConfig {
  double tau1 = 1.0;
  double tau2 = 1.0;
  /// Extra runs from the seed with flipped scalar signs (all, even, odd slots).
  Index restarts = 3;
  double spread_tolerance = 1e-10;
  /// Evaluation budget per run; 0 means 200 p.
  Index max_evaluations = 0;
  Method method = Method::Auto;
};

template <typename Scalar = double>
struct OptimizationResult {
  ParameterSet<Scalar> best_params;
  Scalar best_rec_mk{};
  std::optional<Scalar> baseline_rec_mk;
  Index iterations = 0;
  Index evaluations = 0;
  bool converged = false;
  /// Best objective value found so far, after each simplex iteration.
  std::vector<Scalar> trace;
  UpdatedSystem<Scalar> best_system;
};

/// Minimizes Rec.MK over the free entries of Gamma~_1 with Theta fixed.
/// Infeasible points (singular Gamma~_1, ill-defined inverses) score +1e100.
template <typename Scalar>
OptimizationResult<Scalar> optimize_gamma_tilde(const Embedder<Scalar>& embedder,
                                                const ParameterSet<Scalar>& seed,
                                                const OptimizerConfig& config = {}) {
  constexpr Scalar kLarge = Scalar(1e100);
  const auto& pencil = embedder.pencil();
  const Index p = embedder.p();
  const Index s_tilde = seed.s_tilde;
  const Scalar norm_m = pencil.norm_M();
  const Scalar norm_k = spectral_norm(pencil.K());

  auto make = [&](const Vector<Scalar>& x) {
    ParameterSet<Scalar> ps = seed;
    ps.gamma_tilde = gamma_tilde_from_params(x, s_tilde);
    ps.mode = GammaChoice::ChoiceB;
    return ps;
  };
  auto objective = [&](const Vector<Scalar>& x) -> Scalar {
    if (!x.allFinite()) return kLarge;
    try {
      const auto [dm, dk] = embedder.update_norms(make(x));
      const Scalar v = Scalar(config.tau1) * dm / norm_m + Scalar(config.tau2) * dk / norm_k;
      return std::isfinite(static_cast<double>(v)) ? v : kLarge;
    } catch (const Error&) {
      return kLarge;
    }
  };

  OptimizationResult<Scalar> out;
  if (seed.choice_a_available && seed.mode == GammaChoice::ChoiceA) {
    try {
      out.baseline_rec_mk = rec_mk(pencil, embedder.apply(seed, config.method), config.tau1,
                                   config.tau2);
    } catch (const Error& e) {
      logger().warn("choice (a) baseline is not available: {}", e.what());
    }
  }

  const Vector<Scalar> x0 = params_from_gamma_tilde(seed.gamma_tilde, s_tilde);
  std::vector<Vector<Scalar>> starts{x0};
  const Index scalars = p - 2 * s_tilde;
  if (scalars > 0) {
    for (Index pattern = 0; pattern < config.restarts; ++pattern) {
      Vector<Scalar> x = x0;
      for (Index k = 0; k < scalars; ++k) {
        const bool flip = pattern % 3 == 0 || (pattern % 3 == 1 ? k % 2 == 0 : k % 2 == 1);
        if (flip) x(2 * s_tilde + k) = -x(2 * s_tilde + k);
      }
      if (x != x0) starts.push_back(x);
    }
  }

  NelderMeadOptions nm;
  nm.spread_tolerance = config.spread_tolerance;
  nm.max_evaluations = config.max_evaluations > 0 ? config.max_evaluations : 200 * p;
  nm.initial_step = 0.1 * std::max(1.0, static_cast<double>(x0.cwiseAbs().maxCoeff()));

  Vector<Scalar> best_x = x0;
  Scalar best = objective(x0);
  ++out.evaluations;
  bool any_converged = false;
  for (const auto& start : starts) {
    const auto run = nelder_mead<Scalar>(objective, start, nm);
    out.evaluations += run.evaluations;
    out.iterations += run.iterations;
    for (const Scalar v : run.trace) out.trace.push_back(std::min(v, best));
    if (run.value < best) {
      best = run.value;
      best_x = run.x;
    }
    any_converged = any_converged || run.converged;
    logger().debug("simplex run: {} evaluations, best {:.6e}", run.evaluations,
                   static_cast<double>(run.value));
  }
  // Keep the trace a running minimum across runs.
  for (std::size_t i = 1; i < out.trace.size(); ++i) {
    out.trace[i] = std::min(out.trace[i], out.trace[i - 1]);
  }
  if (!(best < kLarge)) {
    throw Error(ErrorCode::NoFeasiblePoint,
                "no feasible Gamma~_1 found from the seed or any restart");
  }
  out.converged = any_converged;
  out.best_params = make(best_x);
  out.best_system = embedder.apply(out.best_params, config.method);
  out.best_rec_mk = rec_mk(pencil, out.best_system, config.tau1, config.tau2);
  // The simplex compares low-rank norms; the seed stays the answer unless the
  // dense objective confirms the move.
  {
    try {
      auto seed_system = embedder.apply(seed, config.method);
      const Scalar seed_value = rec_mk(pencil, seed_system, config.tau1, config.tau2);
      if (seed_value <= out.best_rec_mk) {
        out.best_params = seed;
        out.best_system = std::move(seed_system);
        out.best_rec_mk = seed_value;
      }
    } catch (const Error&) {
    }
  }
  return out;
}

template <typename Scalar>
OptimizationResult<Scalar> optimize_gamma_tilde(const StructuredPencil<Scalar>& pencil,
                                                const RealSpectralData<Scalar>& old,
                                                const Matrix<Scalar>& target_lambda,
                                                const Matrix<Scalar>& theta,
                                                const ParameterSet<Scalar>& seed,
                                                const OptimizerConfig& config = {},
                                                const Tolerances& tol = {}) {
  ParameterSet<Scalar> s = seed;
  s.theta = theta;
  return optimize_gamma_tilde(Embedder<Scalar>(pencil, old, target_lambda, tol), s, config);
}

}  // namespace spillfree
