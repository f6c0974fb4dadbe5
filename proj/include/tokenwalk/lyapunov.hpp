#pragma once

#include <complex>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "tokenwalk/error.hpp"

namespace tokenwalk {

namespace detail {

inline std::string format_complex(std::complex<double> z) {
  std::ostringstream s;
  s.precision(6);
  s << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return s.str();
}

inline void require_hurwitz(const Eigen::VectorXcd& eigenvalues, double margin) {
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues[i].real() >= -margin)
      throw NumericalError("matrix is not Hurwitz: eigenvalue " + format_complex(eigenvalues[i]) +
                           " has non-negative real part");
}

}  // namespace detail

/// Eigenvalues of a general real square matrix.
inline Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A) {
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A, /*computeU=*/false);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed");
  return schur.matrixT().diagonal();
}

/// True iff every eigenvalue of A has real part below −margin.
inline bool is_hurwitz(const Eigen::MatrixXd& A, double margin = 1e-10) {
  return (eigenvalues(A).real().array() < -margin).all();
}

/// Solves A V + V Aᵀ + Q = 0 for Hurwitz A, i.e. V = ∫₀^∞ e^{At} Q e^{Aᵀt} dt.
///
/// Bartels–Stewart on the complex Schur form A = Z T Z*: with W = Z* V Z and
/// F = Z* Q Z the equation becomes T W + W T* = −F, solved column by column
/// from the last one since T* is lower triangular. The eigenvalues on T's
/// diagonal double as the Hurwitz check.
inline Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                      double hurwitz_margin = 1e-10) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d || Q.rows() != d || Q.cols() != d)
    throw ValidationError("Lyapunov operands must be square and of equal size");
  if (d == 0) return Eigen::MatrixXd(0, 0);

  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed");
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& Z = schur.matrixU();
  detail::require_hurwitz(T.diagonal(), hurwitz_margin);

  const Eigen::MatrixXcd F = Z.adjoint() * Q.cast<std::complex<double>>() * Z;
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(d, d);
  Eigen::MatrixXcd shifted(d, d);
  for (Eigen::Index j = d - 1; j >= 0; --j) {
    // (W T*)_{:,j} = Σ_{k≥j} W_{:,k} conj(T_jk)
    Eigen::VectorXcd rhs = -F.col(j);
    for (Eigen::Index k = j + 1; k < d; ++k) rhs -= std::conj(T(j, k)) * W.col(k);
    shifted = T;
    shifted.diagonal().array() += std::conj(T(j, j));
    W.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXd V = (Z * W * Z.adjoint()).real();
  if (Q.isApprox(Q.transpose(), 1e-12)) V = 0.5 * (V + V.transpose());
  return V;
}

/// ‖A V + V Aᵀ + Q‖_F.
inline double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& V,
                                const Eigen::MatrixXd& Q) {
  return (A * V + V * A.transpose() + Q).norm();
}

}  // namespace tokenwalk
