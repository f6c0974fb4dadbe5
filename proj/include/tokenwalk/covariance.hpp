#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "tokenwalk/error.hpp"
#include "tokenwalk/kernels.hpp"
#include "tokenwalk/lyapunov.hpp"
#include "tokenwalk/spectral.hpp"

namespace tokenwalk {

/// N×D matrix whose row i is H(θ*, i)ᵀ.
struct DriftMatrix {
  Eigen::MatrixXd H;

  Node nodes() const noexcept { return H.rows(); }
  Eigen::Index dim() const noexcept { return H.cols(); }

  /// ‖μᵀH‖_∞, zero at a root of the mean field.
  double root_residual(const Eigen::VectorXd& mu) const {
    return (mu.transpose() * H).cwiseAbs().maxCoeff();
  }
};

/// Blocks of the Jacobian of the coupled mean field (θ, x) at (θ*, μ).
struct JacobianBlocks {
  Eigen::MatrixXd J11;  ///< ∇h(θ*), D×D
  Eigen::MatrixXd J12;  ///< −αHᵀ(Pᵀ + I), D×N
  Eigen::MatrixXd J21;  ///< zero, N×D
  Eigen::MatrixXd J22;  ///< 2αμ1ᵀ − αPᵀ − (α+1)I, N×N
  double alpha = 0.0;

  Eigen::MatrixXd assembled() const {
    const auto D = J11.rows();
    const auto N = J22.rows();
    Eigen::MatrixXd J(D + N, D + N);
    J << J11, J12, J21, J22;
    return J;
  }
};

/// Blocks of the sampling covariance U of the base chain driving (H, δ_X).
struct UBlocks {
  Eigen::MatrixXd U11;  ///< D×D
  Eigen::MatrixXd U12;  ///< D×N
  Eigen::MatrixXd U21;  ///< N×D
  Eigen::MatrixXd U22;  ///< N×N

  Eigen::MatrixXd assembled() const {
    const auto D = U11.rows();
    const auto N = U22.rows();
    Eigen::MatrixXd U(D + N, D + N);
    U << U11, U12, U21, U22;
    return U;
  }
};

/// Step-size regime: 1 for a < b (θ slower), 2 for a = b, 3 for a > b.
enum class TimescaleCase { slow_theta = 1, same = 2, fast_theta = 3 };

namespace detail {

inline void require_dims(const SpectralDecomposition& spec, const DriftMatrix& H) {
  if (H.nodes() != spec.size()) throw ValidationError("drift matrix rows do not match node count");
}

/// (1 + λ_i)/(1 − λ_i) for i < N; errors if some λ_i = 1 off the Perron slot.
inline Eigen::ArrayXd sampling_weights(const SpectralDecomposition& spec) {
  const Node n = spec.size();
  Eigen::ArrayXd w(n - 1);
  for (Node i = 0; i + 1 < n; ++i) {
    const double l = spec.lambdas[i];
    if (l >= 1.0 - 1e-14) throw NumericalError("eigenvalue 1 is repeated; chain is not ergodic");
    w[i] = (1.0 + l) / (1.0 - l);
  }
  return w;
}

/// Σ_{i<N} c_i u_i u_iᵀ.
inline Eigen::MatrixXd weighted_outer(const SpectralDecomposition& spec, const Eigen::ArrayXd& c) {
  const Node n = spec.size();
  const auto Ul = spec.left.leftCols(n - 1);
  return Ul * c.matrix().asDiagonal() * Ul.transpose();
}

inline double indicator(bool b) { return b ? 1.0 : 0.0; }

}  // namespace detail

/// U = Σ_{i<N} (1+λ_i)/(1−λ_i) [Hᵀu_iu_iᵀH, Hᵀu_iu_iᵀ; u_iu_iᵀH, u_iu_iᵀ].
inline UBlocks matrix_u(const SpectralDecomposition& spec, const DriftMatrix& H) {
  detail::require_dims(spec, H);
  UBlocks u;
  u.U22 = detail::weighted_outer(spec, detail::sampling_weights(spec));
  u.U12 = H.H.transpose() * u.U22;
  u.U21 = u.U12.transpose();
  u.U11 = u.U12 * H.H;
  u.U11 = 0.5 * (u.U11 + u.U11.transpose());
  return u;
}

/// Asymptotic covariance of γ_n^{−1/2}(x_n − μ):
/// Σ_{i<N} (1+λ_i)/(1−λ_i) / (2α(1+λ_i) + 2 − 1{a=1}) u_iu_iᵀ.
inline Eigen::MatrixXd v_x(double alpha, double a_exponent, const SpectralDecomposition& spec) {
  const Eigen::ArrayXd lam = spec.lambdas.head(spec.size() - 1).array();
  const double shift = 2.0 - detail::indicator(a_exponent == 1.0);
  const Eigen::ArrayXd c = detail::sampling_weights(spec) / (2.0 * alpha * (1.0 + lam) + shift);
  return detail::weighted_outer(spec, c);
}

/// U_θ(α) = Σ_{i<N} (1+λ_i)/(1−λ_i) / (α(1+λ_i)+1)² Hᵀu_iu_iᵀH.
inline Eigen::MatrixXd u_theta(double alpha, const SpectralDecomposition& spec, const DriftMatrix& H) {
  detail::require_dims(spec, H);
  const Eigen::ArrayXd lam = spec.lambdas.head(spec.size() - 1).array();
  const Eigen::ArrayXd c = detail::sampling_weights(spec) / (alpha * (1.0 + lam) + 1.0).square();
  Eigen::MatrixXd Ut = H.H.transpose() * detail::weighted_outer(spec, c) * H.H;
  return 0.5 * (Ut + Ut.transpose());
}

/// J(α) at (θ*, μ) in block form.
inline JacobianBlocks jacobian_j(double alpha, const Eigen::MatrixXd& grad_h, const DriftMatrix& H,
                                 const ReversibleKernel& k) {
  const Node n = k.size();
  const auto D = H.dim();
  if (H.nodes() != n) throw ValidationError("drift matrix rows do not match node count");
  if (grad_h.rows() != D || grad_h.cols() != D)
    throw ValidationError("mean-field Jacobian must be D×D");
  JacobianBlocks J;
  J.alpha = alpha;
  J.J11 = grad_h;
  const Eigen::MatrixXd Pt_plus_I = k.P().transpose() + Eigen::MatrixXd::Identity(n, n);
  J.J12 = -alpha * H.H.transpose() * Pt_plus_I;
  J.J21 = Eigen::MatrixXd::Zero(n, D);
  J.J22 = 2.0 * alpha * k.mu().values() * Eigen::RowVectorXd::Ones(n) - alpha * k.P().transpose() -
          (alpha + 1.0) * Eigen::MatrixXd::Identity(n, n);
  return J;
}

/// V_θ^(1)(α): solves (∇h + ½1{b=1}I) V + V(…)ᵀ + U_θ(α) = 0.
inline Eigen::MatrixXd v_theta_case1(double alpha, const Eigen::MatrixXd& grad_h, double b_exponent,
                                     const SpectralDecomposition& spec, const DriftMatrix& H) {
  Eigen::MatrixXd A = grad_h;
  A.diagonal().array() += 0.5 * detail::indicator(b_exponent == 1.0);
  return lyapunov_solve(A, u_theta(alpha, spec, H));
}

/// V_θ^(3): solves ∇h V + V∇hᵀ + U_11 = 0; does not depend on α.
inline Eigen::MatrixXd v_theta_case3(const Eigen::MatrixXd& grad_h, const SpectralDecomposition& spec,
                                     const DriftMatrix& H) {
  return lyapunov_solve(grad_h, matrix_u(spec, H).U11);
}

/// V^(2)(α) on (θ, x): solves (J(α) + ½1{b=1}I) V + V(…)ᵀ + U = 0.
inline Eigen::MatrixXd v_case2(double alpha, const Eigen::MatrixXd& grad_h, double b_exponent,
                               const SpectralDecomposition& spec, const DriftMatrix& H,
                               const ReversibleKernel& k) {
  Eigen::MatrixXd A = jacobian_j(alpha, grad_h, H, k).assembled();
  A.diagonal().array() += 0.5 * detail::indicator(b_exponent == 1.0);
  return lyapunov_solve(A, matrix_u(spec, H).assembled());
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[0];
}

inline bool is_symmetric(const Eigen::MatrixXd& M, double tol = 1e-10) {
  return M.rows() == M.cols() && (M - M.transpose()).cwiseAbs().maxCoeff() <= tol;
}

/// Symmetric with smallest eigenvalue ≥ −tol.
inline bool is_symmetric_psd(const Eigen::MatrixXd& M, double tol = 1e-10) {
  return is_symmetric(M, tol) && min_eigenvalue(M) >= -tol;
}

/// Strict Loewner order M1 <_L M2: M2 − M1 is PSD and M1 ≠ M2.
inline bool loewner_lt(const Eigen::MatrixXd& M1, const Eigen::MatrixXd& M2, double tol = 1e-10) {
  if (M1.rows() != M2.rows() || M1.cols() != M2.cols())
    throw ValidationError("Loewner comparison of matrices with different shapes");
  if (!is_symmetric(M1, 1e-10) || !is_symmetric(M2, 1e-10))
    throw ValidationError("Loewner comparison requires symmetric matrices");
  const Eigen::MatrixXd diff = M2 - M1;
  return min_eigenvalue(diff) >= -tol && diff.norm() > tol;
}

/// Theoretical covariance objects for one (α, case) pair.
struct CovarianceReport {
  TimescaleCase case_id = TimescaleCase::slow_theta;
  double alpha = 0.0;
  double a_exponent = 1.0;
  double b_exponent = 1.0;
  Eigen::MatrixXd V_x;
  Eigen::MatrixXd V_theta;
  UBlocks U;
  Eigen::MatrixXd U_theta;
  JacobianBlocks J;
};

inline TimescaleCase classify(double a_exponent, double b_exponent) {
  if (a_exponent < b_exponent) return TimescaleCase::slow_theta;
  if (a_exponent == b_exponent) return TimescaleCase::same;
  return TimescaleCase::fast_theta;
}

/// Evaluates every covariance object for the regime implied by (a, b).
/// In the equal-timescale regime V_theta and V_x are the blocks of V^(2).
inline CovarianceReport covariance_report(double alpha, double a_exponent, double b_exponent,
                                          const Eigen::MatrixXd& grad_h, const SpectralDecomposition& spec,
                                          const DriftMatrix& H, const ReversibleKernel& k) {
  CovarianceReport r;
  r.case_id = classify(a_exponent, b_exponent);
  r.alpha = alpha;
  r.a_exponent = a_exponent;
  r.b_exponent = b_exponent;
  r.U = matrix_u(spec, H);
  r.U_theta = u_theta(alpha, spec, H);
  r.J = jacobian_j(alpha, grad_h, H, k);
  const auto D = H.dim();
  switch (r.case_id) {
    case TimescaleCase::slow_theta:
      r.V_theta = v_theta_case1(alpha, grad_h, b_exponent, spec, H);
      r.V_x = v_x(alpha, a_exponent, spec);
      break;
    case TimescaleCase::same: {
      const Eigen::MatrixXd V = v_case2(alpha, grad_h, b_exponent, spec, H, k);
      r.V_theta = V.topLeftCorner(D, D);
      r.V_x = V.bottomRightCorner(spec.size(), spec.size());
      break;
    }
    case TimescaleCase::fast_theta:
      r.V_theta = v_theta_case3(grad_h, spec, H);
      r.V_x = v_x(alpha, a_exponent, spec);
      break;
  }
  return r;
}

}  // namespace tokenwalk
