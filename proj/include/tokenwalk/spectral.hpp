#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "tokenwalk/error.hpp"
#include "tokenwalk/kernels.hpp"

namespace tokenwalk {

/// Eigenpairs of a reversible kernel. Column i of `right` is v_i with
/// P v_i = λ_i v_i; column i of `left` is u_i = D_μ v_i with Pᵀu_i = λ_i u_i.
/// Eigenvalues ascend, the last is exactly 1 with u_N = μ and v_N = 1, and
/// u_iᵀv_j = δ_ij.
struct SpectralDecomposition {
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  Eigen::VectorXd mu;

  Node size() const noexcept { return lambdas.size(); }
};

/// Decomposes P through the symmetric similarity S = D_μ^{1/2} P D_μ^{−1/2}.
/// Requires an aperiodic, irreducible kernel; see lazy_transform for periodic ones.
inline SpectralDecomposition decompose(const ReversibleKernel& k) {
  const Node n = k.size();
  const Eigen::ArrayXd sqrt_mu = k.mu().values().array().sqrt();
  Eigen::MatrixXd S = sqrt_mu.matrix().asDiagonal() * k.P() * sqrt_mu.inverse().matrix().asDiagonal();
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw ValidationError("kernel is not reversible with respect to its target");
  S = 0.5 * (S + S.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");

  SpectralDecomposition out;
  out.lambdas = eig.eigenvalues();
  out.mu = k.mu().values();
  if (n > 1 && out.lambdas[0] <= -1.0 + 1e-12)
    throw NumericalError("kernel is periodic (smallest eigenvalue " + std::to_string(out.lambdas[0]) +
                         "); apply lazy_transform first");
  if (std::abs(out.lambdas[n - 1] - 1.0) > 1e-9)
    throw NumericalError("largest eigenvalue is not 1; kernel is not stochastic");
  if (n > 1 && out.lambdas[n - 2] >= 1.0 - 1e-12)
    throw NumericalError("eigenvalue 1 is repeated; kernel is reducible");

  const Eigen::MatrixXd& W = eig.eigenvectors();
  out.right = sqrt_mu.inverse().matrix().asDiagonal() * W;
  for (Node i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    out.right.col(i).cwiseAbs().maxCoeff(&arg);
    if (out.right(arg, i) < 0.0) out.right.col(i) *= -1.0;
  }
  out.lambdas[n - 1] = 1.0;
  out.right.col(n - 1).setOnes();
  out.left = out.mu.asDiagonal() * out.right;
  return out;
}

}  // namespace tokenwalk
