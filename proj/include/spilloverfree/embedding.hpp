#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "spilloverfree/linalg.hpp"
#include "spilloverfree/log.hpp"
#include "spilloverfree/pencil.hpp"
#include "spilloverfree/spectral.hpp"
#include "spilloverfree/types.hpp"

namespace spillfree {

enum class Method { Direct, Smw, Auto };
enum class GammaChoice { ChoiceA, ChoiceB, Custom };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Direct: return "direct";
    case Method::Smw: return "smw";
    case Method::Auto: return "auto";
  }
  return "?";
}

inline std::string_view to_string(GammaChoice c) {
  switch (c) {
    case GammaChoice::ChoiceA: return "choice_a";
    case GammaChoice::ChoiceB: return "choice_b";
    case GammaChoice::Custom: return "custom";
  }
  return "?";
}

/// The SMW route pays off for low-rank updates; use it when p <= n_u / 4.
inline Method resolve_method(Method m, Index p, Index n_u) {
  if (m != Method::Auto) return m;
  return 4 * p <= n_u ? Method::Smw : Method::Direct;
}

/// Number of leading 2x2 conjugate blocks of a real block-diagonal Lambda.
template <typename Scalar>
Index leading_pair_count(const Matrix<Scalar>& lambda) {
  Index s = 0;
  Index j = 0;
  while (j + 1 < lambda.rows() && lambda(j, j + 1) != Scalar(0)) {
    ++s;
    j += 2;
  }
  return s;
}

/// Free parameters of Gamma~_1 = diag([a_j b_j; b_j -a_j] (j <= s~), c_k):
/// the vector [a_1, b_1, ..., a_s~, b_s~, c_{2s~+1}, ..., c_p].
template <typename Scalar>
Matrix<Scalar> gamma_tilde_from_params(const Vector<Scalar>& params, Index s_tilde) {
  const Index p = params.size();
  if (2 * s_tilde > p) throw Error(ErrorCode::MalformedBlocks, "pair count exceeds p/2");
  Matrix<Scalar> g = Matrix<Scalar>::Zero(p, p);
  for (Index j = 0; j < s_tilde; ++j) {
    const Scalar a = params(2 * j), b = params(2 * j + 1);
    g.template block<2, 2>(2 * j, 2 * j) << a, b, b, -a;
  }
  for (Index k = 2 * s_tilde; k < p; ++k) g(k, k) = params(k);
  return g;
}

template <typename Scalar>
Vector<Scalar> params_from_gamma_tilde(const Matrix<Scalar>& g, Index s_tilde) {
  const Index p = g.rows();
  Vector<Scalar> params(p);
  for (Index j = 0; j < s_tilde; ++j) {
    params(2 * j) = g(2 * j, 2 * j);
    params(2 * j + 1) = g(2 * j, 2 * j + 1);
  }
  for (Index k = 2 * s_tilde; k < p; ++k) params(k) = g(k, k);
  return params;
}

template <typename Scalar = double>
struct ParameterSet {
  Matrix<Scalar> theta;
  Matrix<Scalar> gamma_tilde;
  Index s_tilde = 0;
  GammaChoice mode = GammaChoice::Custom;
  /// Whether Gamma~_1 = Gamma_1 was possible (s~ == s).
  bool choice_a_available = false;

  Index p() const { return theta.rows(); }
};

/// Departure of Gamma from the structure forced by simple nonzero
/// eigenvalues: block diagonal, [a b; b -a] pair blocks, and
/// Gamma Lambda^{-1} = Lambda^{-T} Gamma. Relative to ||Gamma||.
template <typename Scalar>
Scalar gamma_structure_defect(const Matrix<Scalar>& gamma, const Matrix<Scalar>& lambda, Index s) {
  const Index p = gamma.rows();
  // Off-block entries and the a / -a pattern, averaged over the pair.
  Matrix<Scalar> fitted = gamma_tilde_from_params(params_from_gamma_tilde(gamma, s), s);
  for (Index j = 0; j < s; ++j) {
    const Scalar a = (gamma(2 * j, 2 * j) - gamma(2 * j + 1, 2 * j + 1)) / Scalar(2);
    const Scalar b = (gamma(2 * j, 2 * j + 1) + gamma(2 * j + 1, 2 * j)) / Scalar(2);
    fitted.template block<2, 2>(2 * j, 2 * j) << a, b, b, -a;
  }
  const Scalar scale = gamma.norm();
  if (scale == Scalar(0) || p == 0) return Scalar(0);
  const Scalar layout = (gamma - fitted).norm() / scale;
  const Matrix<Scalar> linv = lambda.inverse();
  const Scalar commutation =
      (gamma * linv - linv.transpose() * gamma).norm() / (scale * linv.norm());
  return std::max(layout, commutation);
}

/// Checks the block layout, symmetry, nonsingularity and the commutation
/// Gamma~_1 Lambda~_1^{-1} = Lambda~_1^{-T} Gamma~_1.
template <typename Scalar>
void validate_parameters(const ParameterSet<Scalar>& ps, const Matrix<Scalar>& target_lambda,
                         const Tolerances& tol = {}) {
  const Index p = target_lambda.rows();
  if (ps.theta.rows() != p || ps.theta.cols() != p || ps.gamma_tilde.rows() != p ||
      ps.gamma_tilde.cols() != p) {
    throw Error(ErrorCode::DimensionMismatch, "parameter matrices must be p x p");
  }
  if (leading_pair_count(target_lambda) != ps.s_tilde) {
    throw Error(ErrorCode::MalformedBlocks,
                "Gamma~_1 block structure does not conform to the target eigenvalues");
  }
  if (gamma_structure_defect(ps.gamma_tilde, target_lambda, ps.s_tilde) > 1e-10) {
    throw Error(ErrorCode::MalformedBlocks,
                "Gamma~_1 must be diag([a b; b -a], ..., c, ...) with the target's layout");
  }
  if (!(reciprocal_condition(ps.gamma_tilde) >= tol.nonsingular)) {
    throw Error(ErrorCode::Singular, "Gamma~_1 must be nonsingular");
  }
  if (!(reciprocal_condition(ps.theta) >= tol.nonsingular)) {
    throw Error(ErrorCode::Singular, "Theta must be nonsingular");
  }
  // The projection onto the block layout must commute exactly.
  const Matrix<Scalar> projected = gamma_tilde_from_params(
      params_from_gamma_tilde(ps.gamma_tilde, ps.s_tilde), ps.s_tilde);
  const Matrix<Scalar> linv =
      checked_inverse(target_lambda, tol.ill_defined, ErrorCode::ZeroEigenvalue, "target Lambda");
  const Matrix<Scalar> lhs = projected * linv;
  const Matrix<Scalar> rhs = linv.transpose() * projected;
  const Scalar scale = projected.norm() * linv.norm();
  if ((lhs - rhs).norm() > Scalar(1e-12) * scale) {
    throw Error(ErrorCode::ConditionViolated, "Gamma~_1 does not commute with Lambda~_1^{-1}");
  }
}

/// Gamma_1 = X_1u^T M_u X_1u, symmetrized.
template <typename Scalar>
Matrix<Scalar> compute_gamma1(const StructuredPencil<Scalar>& pencil, const Matrix<Scalar>& x1,
                              const Tolerances& tol = {}) {
  if (x1.rows() != pencil.n() || x1.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "X_1 must be n x p with p >= 1");
  }
  const auto x1u = x1.topRows(pencil.n_u());
  if (numerical_rank(x1u, tol.rank) < x1.cols()) {
    throw Error(ErrorCode::RankDeficient,
                "X_1u is rank deficient; the update needs full column rank eigenvector blocks");
  }
  Matrix<Scalar> gamma = symmetrize(Matrix<Scalar>(x1u.transpose() * pencil.M_u() * x1u));
  if (!(reciprocal_condition(gamma) >= tol.nonsingular)) {
    throw Error(ErrorCode::Singular, "Gamma_1 = X_1u^T M_u X_1u is singular");
  }
  return gamma;
}

/// Choice (a) seed: Theta = I and Gamma~_1 = Gamma_1 when s~ == s. Otherwise
/// an identity-like seed conforming to s~, with scalar signs copied from
/// Gamma_1 where its diagonal slot is also scalar.
template <typename Scalar>
ParameterSet<Scalar> default_gamma_tilde(const Matrix<Scalar>& gamma1, Index s, Index s_tilde) {
  const Index p = gamma1.rows();
  ParameterSet<Scalar> ps;
  ps.theta = Matrix<Scalar>::Identity(p, p);
  ps.s_tilde = s_tilde;
  if (s == s_tilde) {
    ps.gamma_tilde = gamma1;
    ps.mode = GammaChoice::ChoiceA;
    ps.choice_a_available = true;
    return ps;
  }
  Vector<Scalar> params = Vector<Scalar>::Zero(p);
  for (Index j = 0; j < s_tilde; ++j) params(2 * j) = Scalar(1);
  for (Index k = 2 * s_tilde; k < p; ++k) {
    params(k) = (k >= 2 * s && gamma1(k, k) < Scalar(0)) ? Scalar(-1) : Scalar(1);
  }
  ps.gamma_tilde = gamma_tilde_from_params(params, s_tilde);
  ps.mode = GammaChoice::Custom;
  ps.choice_a_available = false;
  return ps;
}

template <typename Scalar = double>
struct UpdatedSystem {
  Matrix<Scalar> M_u_tilde;
  Matrix<Scalar> K_tilde;
  ParameterSet<Scalar> params;
  Method method = Method::Smw;
  Matrix<Scalar> X1_tilde;

  StructuredPencil<Scalar> pencil(Index n_phi, const Tolerances& tol = {}) const {
    return StructuredPencil<Scalar>(M_u_tilde, K_tilde, M_u_tilde.rows(), n_phi, tol);
  }
};

/// Precomputed data for repeated updates of one pencil and one replaced set.
///
/// With W_M = Theta Gamma~^{-1} Theta^T - Gamma_1^{-1} and
///      W_K = Lambda_1^{-1} Gamma_1^{-1} - Theta Lambda~^{-1} Gamma~^{-1} Theta^T:
///   direct:  M~_u = (M_u^{-1} + X_1u W_M X_1u^T)^{-1},  K~ = (K^{-1} + X_1 W_K X_1^T)^{-1}
///   smw:     M~_u = M_u - M_u X_1u W_M (I + X_1u^T M_u X_1u W_M)^{-1} X_1u^T M_u
///            K~   = K - K X_1 W_K (I + X_1^T K X_1 W_K)^{-1} X_1^T K
/// Only Gamma~ and Theta vary between calls.
template <typename Scalar = double>
class Embedder {
 public:
  Embedder(const StructuredPencil<Scalar>& pencil, const RealSpectralData<Scalar>& old,
           const Matrix<Scalar>& target_lambda, const Tolerances& tol = {})
      : pencil_(pencil), old_(old), target_(target_lambda), tol_(tol) {
    check_real_spectral(old);
    const Index p = old.p();
    if (p < 1 || old.X.rows() != pencil.n()) {
      throw Error(ErrorCode::DimensionMismatch, "old eigendata does not fit the pencil");
    }
    if (target_lambda.rows() != p || target_lambda.cols() != p) {
      throw Error(ErrorCode::DimensionMismatch, "target Lambda must be p x p");
    }
    s_tilde_ = leading_pair_count(target_lambda);
    check_block_structure(target_lambda, s_tilde_);
    gamma1_ = compute_gamma1(pencil, old.X, tol);
    gamma1_inv_ = checked_inverse(gamma1_, tol.ill_defined, ErrorCode::Singular, "Gamma_1");
    lambda1_inv_ = checked_inverse(Matrix<Scalar>(old.Lambda), tol.ill_defined,
                                   ErrorCode::ZeroEigenvalue, "Lambda_1");
    target_inv_ = checked_inverse(target_, tol.ill_defined, ErrorCode::ZeroEigenvalue,
                                  "target Lambda");
    base_k_ = symmetrize(Matrix<Scalar>(lambda1_inv_ * gamma1_inv_));
    x1u_ = old.X.topRows(pencil.n_u());
    mass_x_ = pencil.M_u() * x1u_;
    mass_cap_ = x1u_.transpose() * mass_x_;
    stiff_x_ = pencil.K() * old.X;
    stiff_cap_ = old.X.transpose() * stiff_x_;
  }

  Index p() const { return old_.p(); }
  Index s() const { return old_.s; }
  Index s_tilde() const { return s_tilde_; }
  const Matrix<Scalar>& gamma1() const { return gamma1_; }
  const StructuredPencil<Scalar>& pencil() const { return pencil_; }
  const RealSpectralData<Scalar>& old() const { return old_; }
  const Matrix<Scalar>& target_lambda() const { return target_; }

  UpdatedSystem<Scalar> apply(const ParameterSet<Scalar>& ps, Method method = Method::Auto) const {
    validate_parameters(ps, target_, tol_);
    const auto [w_m, w_k] = weights(ps);

    UpdatedSystem<Scalar> out;
    out.params = ps;
    out.method = resolve_method(method, p(), pencil_.n_u());
    if (out.method == Method::Direct) {
      out.M_u_tilde = direct_update(mass_inverse(), x1u_, w_m, "M~_u");
      out.K_tilde = direct_update(stiffness_inverse(), old_.X, w_k, "K~");
    } else {
      out.M_u_tilde = smw_update(pencil_.M_u(), mass_x_, mass_cap_, w_m, "M~_u");
      out.K_tilde = smw_update(pencil_.K(), stiff_x_, stiff_cap_, w_k, "K~");
    }
    out.X1_tilde = old_.X * ps.theta;
    return out;
  }

  /// Spectral norms of M_u - M~_u and K - K~ from the rank-p SMW factors,
  /// without forming either updated matrix.
  std::pair<Scalar, Scalar> update_norms(const ParameterSet<Scalar>& ps) const {
    validate_parameters(ps, target_, tol_);
    const auto [w_m, w_k] = weights(ps);
    if (!mass_r_) {
      mass_r_ = thin_r(mass_x_);
      stiff_r_ = thin_r(stiff_x_);
    }
    return {low_rank_norm(*mass_r_, mass_cap_, w_m, "M~_u"),
            low_rank_norm(*stiff_r_, stiff_cap_, w_k, "K~")};
  }

 private:
  std::pair<Matrix<Scalar>, Matrix<Scalar>> weights(const ParameterSet<Scalar>& ps) const {
    const Matrix<Scalar> gt_inv =
        checked_inverse(ps.gamma_tilde, tol_.ill_defined, ErrorCode::Singular, "Gamma~_1");
    Matrix<Scalar> w_m = symmetrize(Matrix<Scalar>(ps.theta * gt_inv * ps.theta.transpose())) -
                         symmetrize(gamma1_inv_);
    Matrix<Scalar> w_k =
        base_k_ -
        symmetrize(Matrix<Scalar>(ps.theta * (target_inv_ * gt_inv) * ps.theta.transpose()));
    return {std::move(w_m), std::move(w_k)};
  }

  static Matrix<Scalar> thin_r(const Matrix<Scalar>& b) {
    Eigen::HouseholderQR<Matrix<Scalar>> qr(b);
    const Index k = std::min(b.rows(), b.cols());
    return qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  }

  /// ||B W (I + C W)^{-1} B^T||_2 = ||R W (I + C W)^{-1} R^T||_2 for B = Q R.
  Scalar low_rank_norm(const Matrix<Scalar>& r, const Matrix<Scalar>& cap,
                       const Matrix<Scalar>& w, const std::string& what) const {
    const Index p = w.rows();
    const Matrix<Scalar> capacitance = Matrix<Scalar>::Identity(p, p) + cap * w;
    auto lu = checked_lu(capacitance, tol_.ill_defined, ErrorCode::IllDefined,
                         what + " capacitance matrix");
    const Matrix<Scalar> core = r * w * lu.solve(Matrix<Scalar>(r.transpose()));
    if (!core.allFinite()) throw Error(ErrorCode::IllDefined, what + " is not finite");
    return spectral_norm(symmetrize(core));
  }

  const Matrix<Scalar>& mass_inverse() const {
    if (!mass_inv_) {
      mass_inv_ = symmetrize(
          checked_inverse(pencil_.M_u(), tol_.ill_defined, ErrorCode::IllDefined, "M_u"));
    }
    return *mass_inv_;
  }

  const Matrix<Scalar>& stiffness_inverse() const {
    if (!stiff_inv_) {
      auto lu = checked_lu(pencil_.K(), tol_.ill_defined, ErrorCode::IllDefined, "K");
      const double rc = static_cast<double>(lu_rcond(lu));
      if (rc < 1e-12) {
        logger().warn("K is ill-conditioned (condition estimate {:.3e}); direct update may lose "
                      "accuracy", 1.0 / rc);
      }
      stiff_inv_ = symmetrize(Matrix<Scalar>(lu.inverse()));
    }
    return *stiff_inv_;
  }

  Matrix<Scalar> direct_update(const Matrix<Scalar>& inverse, const Matrix<Scalar>& x,
                               const Matrix<Scalar>& w, const std::string& what) const {
    const Matrix<Scalar> inner = symmetrize(Matrix<Scalar>(inverse + x * w * x.transpose()));
    const Matrix<Scalar> result =
        checked_inverse(inner, tol_.ill_defined, ErrorCode::IllDefined, what + " inverse");
    return finish(result, what);
  }

  Matrix<Scalar> smw_update(const Matrix<Scalar>& base, const Matrix<Scalar>& base_x,
                            const Matrix<Scalar>& cap, const Matrix<Scalar>& w,
                            const std::string& what) const {
    const Index p = w.rows();
    const Matrix<Scalar> capacitance = Matrix<Scalar>::Identity(p, p) + cap * w;
    auto lu = checked_lu(capacitance, tol_.ill_defined, ErrorCode::IllDefined,
                         what + " capacitance matrix");
    const Matrix<Scalar> correction = base_x * w * lu.solve(Matrix<Scalar>(base_x.transpose()));
    return finish(Matrix<Scalar>(base - correction), what);
  }

  Matrix<Scalar> finish(const Matrix<Scalar>& m, const std::string& what) const {
    if (!m.allFinite()) throw Error(ErrorCode::IllDefined, what + " is not finite");
    if (relative_asymmetry(m) > 1e-8) {
      logger().warn("{} asymmetry {:.3e} before symmetrization", what,
                    static_cast<double>(relative_asymmetry(m)));
    }
    return symmetrize(m);
  }

  StructuredPencil<Scalar> pencil_;
  RealSpectralData<Scalar> old_;
  Matrix<Scalar> target_;
  Tolerances tol_;
  Index s_tilde_ = 0;
  Matrix<Scalar> gamma1_, gamma1_inv_, lambda1_inv_, target_inv_, base_k_;
  Matrix<Scalar> x1u_, mass_x_, mass_cap_, stiff_x_, stiff_cap_;
  mutable std::optional<Matrix<Scalar>> mass_inv_, stiff_inv_, mass_r_, stiff_r_;
};

template <typename Scalar>
UpdatedSystem<Scalar> embed_direct(const StructuredPencil<Scalar>& pencil,
                                   const RealSpectralData<Scalar>& old,
                                   const Matrix<Scalar>& target_lambda,
                                   const ParameterSet<Scalar>& params, const Tolerances& tol = {}) {
  return Embedder<Scalar>(pencil, old, target_lambda, tol).apply(params, Method::Direct);
}

template <typename Scalar>
UpdatedSystem<Scalar> embed_smw(const StructuredPencil<Scalar>& pencil,
                                const RealSpectralData<Scalar>& old,
                                const Matrix<Scalar>& target_lambda,
                                const ParameterSet<Scalar>& params, const Tolerances& tol = {}) {
  return Embedder<Scalar>(pencil, old, target_lambda, tol).apply(params, Method::Smw);
}

template <typename Scalar>
UpdatedSystem<Scalar> embed(const StructuredPencil<Scalar>& pencil,
                            const RealSpectralData<Scalar>& old,
                            const Matrix<Scalar>& target_lambda,
                            const ParameterSet<Scalar>& params, Method method = Method::Auto,
                            const Tolerances& tol = {}) {
  return Embedder<Scalar>(pencil, old, target_lambda, tol).apply(params, method);
}

/// Conditions under which a nonsingular X and J = diag(J_1, 0) with
/// M X + K X J = 0 come from a symmetric pencil with M = diag(M_u, 0):
///   T^{-1} = diag(Gamma_11, 0) + X_phi^T Phi X_phi nonsingular,
///   J_1^T Gamma_11 = Gamma_11 J_1,  X_u T X_phi^T = 0,  X_phi T X_phi^T = Phi^{-1}.
template <typename Scalar>
CheckReport verify_theorem1(const Matrix<Scalar>& x, const Matrix<Scalar>& j1,
                            const Matrix<Scalar>& gamma11, const Matrix<Scalar>& phi, double tol,
                            const Tolerances& tols = {}) {
  const Index n = x.rows();
  const Index n_u = j1.rows();
  const Index n_phi = n - n_u;
  if (x.cols() != n || j1.cols() != n_u || n_u < 1 || n_phi < 0 || gamma11.rows() != n_u ||
      gamma11.cols() != n_u || phi.rows() != n_phi || phi.cols() != n_phi) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent spectral decomposition data");
  }
  const auto x_u = x.topRows(n_u);
  const auto x_phi = x.bottomRows(n_phi);
  Matrix<Scalar> t_inv = Matrix<Scalar>::Zero(n, n);
  t_inv.topLeftCorner(n_u, n_u) = gamma11;
  if (n_phi > 0) t_inv += x_phi.transpose() * phi * x_phi;
  CheckReport report;
  const Scalar rc = reciprocal_condition(t_inv);
  if (!(rc >= tols.ill_defined)) {
    throw Error(ErrorCode::SingularT, "T^{-1} = diag(Gamma_11, 0) + X_phi^T Phi X_phi is singular");
  }
  report.add_at_least("t_nonsingular", static_cast<double>(rc), tols.ill_defined);
  const Matrix<Scalar> t = t_inv.partialPivLu().inverse();

  const Scalar comm_scale = spectral_norm(j1) * spectral_norm(gamma11);
  const Matrix<Scalar> comm = j1.transpose() * gamma11 - gamma11 * j1;
  report.add_at_most("commutation", static_cast<double>(spectral_norm(comm) / comm_scale), tol);

  if (n_phi > 0) {
    const Scalar t_norm = spectral_norm(t);
    const Matrix<Scalar> decoupling = x_u * t * x_phi.transpose();
    const Scalar dec_scale = spectral_norm(x_u) * t_norm * spectral_norm(x_phi);
    report.add_at_most("decoupling", static_cast<double>(spectral_norm(decoupling) / dec_scale),
                       tol);
    const Matrix<Scalar> phi_inv =
        checked_inverse(phi, tols.ill_defined, ErrorCode::Singular, "Phi");
    const Matrix<Scalar> electric = x_phi * t * x_phi.transpose() - phi_inv;
    report.add_at_most("electric_block",
                       static_cast<double>(spectral_norm(electric) / spectral_norm(phi_inv)), tol);
  }
  return report;
}

/// Rebuilds the pencil from a Jordan pair: M_u = (X_u T X_u^T)^{-1} and
/// K = X^{-T} diag(-Gamma_11 J_1^{-1}, K22') X^{-1}. K22' defaults to I.
template <typename Scalar>
StructuredPencil<Scalar> reconstruct_theorem1(const Matrix<Scalar>& x, const Matrix<Scalar>& j1,
                                              const Matrix<Scalar>& gamma11,
                                              const Matrix<Scalar>& phi,
                                              std::optional<Matrix<Scalar>> k22 = std::nullopt,
                                              double tol = 1e-10, const Tolerances& tols = {}) {
  const auto report = verify_theorem1(x, j1, gamma11, phi, tol, tols);
  if (!report.passed()) {
    for (const auto& c : report.checks) {
      if (!c.passed) {
        throw Error(ErrorCode::ConditionViolated,
                    "spectral decomposition condition '" + c.name + "' fails");
      }
    }
  }
  const Index n = x.rows();
  const Index n_u = j1.rows();
  const Index n_phi = n - n_u;
  const Matrix<Scalar> k22p = k22 ? *k22 : Matrix<Scalar>::Identity(n_phi, n_phi);
  if (k22p.rows() != n_phi || k22p.cols() != n_phi) {
    throw Error(ErrorCode::DimensionMismatch, "K22' must be n_phi x n_phi");
  }
  Matrix<Scalar> t_inv = Matrix<Scalar>::Zero(n, n);
  t_inv.topLeftCorner(n_u, n_u) = gamma11;
  if (n_phi > 0) t_inv += x.bottomRows(n_phi).transpose() * phi * x.bottomRows(n_phi);
  const Matrix<Scalar> t = t_inv.partialPivLu().inverse();
  const Matrix<Scalar> mass_inv = symmetrize(Matrix<Scalar>(x.topRows(n_u) * t * x.topRows(n_u).transpose()));
  const Matrix<Scalar> m_u =
      symmetrize(checked_inverse(mass_inv, tols.ill_defined, ErrorCode::IllDefined, "X_u T X_u^T"));

  const Matrix<Scalar> j1_inv = checked_inverse(j1, tols.ill_defined, ErrorCode::IllDefined, "J_1");
  Matrix<Scalar> core = Matrix<Scalar>::Zero(n, n);
  core.topLeftCorner(n_u, n_u) = symmetrize(Matrix<Scalar>(-gamma11 * j1_inv));
  if (n_phi > 0) core.bottomRightCorner(n_phi, n_phi) = k22p;
  const auto x_lu = checked_lu(x, tols.ill_defined, ErrorCode::IllDefined, "X");
  const Matrix<Scalar> x_inv = x_lu.inverse();
  const Matrix<Scalar> k = symmetrize(Matrix<Scalar>(x_inv.transpose() * core * x_inv));
  return StructuredPencil<Scalar>(m_u, k, n_u, n_phi, tols);
}

}  // namespace spillfree
