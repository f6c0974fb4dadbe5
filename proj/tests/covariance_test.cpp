#include <gtest/gtest.h>

#include "tokenwalk/covariance.hpp"
#include "tokenwalk_verify/oracles.hpp"

using namespace tokenwalk;

namespace {

double max_abs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd random_hurwitz(Eigen::Index d, SplitMix64& rng) {
  const Eigen::MatrixXd B = oracle::normal_matrix(d, d, rng);
  Eigen::MatrixXd A = 0.5 * (B - B.transpose()) - B * B.transpose() / static_cast<double>(d);
  A.diagonal().array() -= 0.5;
  return A;
}

}  // namespace

TEST(MatrixU, ZeroDriftLeavesOnlyMeasureBlock) {
  const auto inst = oracle::random_instance(1);
  const DriftMatrix H{Eigen::MatrixXd::Zero(inst.kernel.size(), 2)};
  const auto u = matrix_u(inst.spec, H);
  EXPECT_EQ(max_abs(u.U11), 0.0);
  EXPECT_EQ(max_abs(u.U12), 0.0);
  EXPECT_GT(max_abs(u.U22), 0.0);
}

TEST(MatrixU, PathOfThreeMatchesCovarianceSeries) {
  const auto k = build_mhrw(path_graph(3), TargetDistribution::uniform(3));
  const auto spec = decompose(k);
  const DriftMatrix H{Eigen::MatrixXd::Zero(3, 1)};
  const Eigen::MatrixXd U22 = matrix_u(spec, H).U22;
  const Eigen::MatrixXd ref = oracle::covariance_series(k.P(), k.mu().values(), Eigen::MatrixXd::Identity(3, 3), 200);
  EXPECT_LT(max_abs(U22 - ref), 1e-14);
  // Eigenvalues ±1/2 give weights 3 and 1/3.
  const Eigen::MatrixXd by_hand = 3.0 * spec.left.col(1) * spec.left.col(1).transpose() +
                                  (1.0 / 3.0) * spec.left.col(0) * spec.left.col(0).transpose();
  EXPECT_LT(max_abs(U22 - by_hand), 1e-15);
}

TEST(MatrixU, FullMatrixMatchesCovarianceSeries) {
  SplitMix64 rng(9);
  for (int t = 0; t < 5; ++t) {
    const auto inst = oracle::random_instance(rng(), 5, 8);
    const auto n = inst.kernel.size();
    Eigen::MatrixXd G(n, inst.H.dim() + n);
    G << inst.H.H, Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd ref = oracle::covariance_series(inst.kernel.P(), inst.kernel.mu().values(), G);
    EXPECT_LT(max_abs(matrix_u(inst.spec, inst.H).assembled() - ref), 1e-6);
  }
}

TEST(MatrixU, SymmetricPsd) {
  const auto inst = oracle::random_instance(4);
  const Eigen::MatrixXd U = matrix_u(inst.spec, inst.H).assembled();
  EXPECT_TRUE(is_symmetric_psd(U));
}

TEST(MatrixU, DimensionMismatch) {
  const auto inst = oracle::random_instance(4);
  EXPECT_THROW(matrix_u(inst.spec, DriftMatrix{Eigen::MatrixXd::Zero(inst.kernel.size() + 1, 2)}),
               ValidationError);
}

TEST(Vx, SolvesMeasureLyapunovEquation) {
  SplitMix64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(rng());
    const double alpha = 20.0 * rng.uniform01();
    const Eigen::MatrixXd U22 = matrix_u(inst.spec, inst.H).U22;
    const Eigen::MatrixXd J22 = jacobian_j(alpha, inst.grad_h, inst.H, inst.kernel).J22;
    for (double a : {0.8, 1.0}) {
      Eigen::MatrixXd A = J22;
      if (a == 1.0) A.diagonal().array() += 0.5;
      EXPECT_LT(max_abs(v_x(alpha, a, inst.spec) - lyapunov_solve(A, U22)), 1e-10);
    }
  }
}

TEST(Vx, ShrinksLikeInverseAlpha) {
  const auto inst = oracle::random_instance(6);
  const double t1 = (1e3 * v_x(1e3, 0.8, inst.spec)).trace();
  const double t2 = (1e4 * v_x(1e4, 0.8, inst.spec)).trace();
  EXPECT_NEAR(t1 / t2, 1.0, 2e-3);
  EXPECT_TRUE(loewner_lt(v_x(5.0, 0.8, inst.spec), v_x(1.0, 0.8, inst.spec)));
}

TEST(UTheta, ReducesToU11WithoutRepulsion) {
  const auto inst = oracle::random_instance(7);
  EXPECT_LT(max_abs(u_theta(0.0, inst.spec, inst.H) - matrix_u(inst.spec, inst.H).U11), 1e-12);
}

TEST(UTheta, DecaysLikeInverseSquare) {
  const auto inst = oracle::random_instance(8);
  const double t1 = 1e6 * u_theta(1e3, inst.spec, inst.H).trace();
  const double t2 = 1e8 * u_theta(1e4, inst.spec, inst.H).trace();
  EXPECT_NEAR(t1 / t2, 1.0, 5e-3);
}

TEST(UTheta, MatchesBlockElimination) {
  SplitMix64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(rng());
    const double alpha = 10.0 * rng.uniform01();
    const auto u = matrix_u(inst.spec, inst.H);
    const auto J = jacobian_j(alpha, inst.grad_h, inst.H, inst.kernel);
    const Eigen::MatrixXd M = J.J12 * J.J22.inverse();
    const Eigen::MatrixXd ref = u.U11 - u.U12 * M.transpose() - M * u.U21 + M * u.U22 * M.transpose();
    EXPECT_LT(max_abs(u_theta(alpha, inst.spec, inst.H) - ref), 1e-10 * std::max(1.0, max_abs(ref)));
  }
}

TEST(JacobianJ, MeasureBlockSpectrum) {
  const auto inst = oracle::random_instance(13);
  const double alpha = 2.5;
  const auto J = jacobian_j(alpha, inst.grad_h, inst.H, inst.kernel);
  const auto n = inst.kernel.size();
  Eigen::VectorXd ev = eigenvalues(J.J22).real();
  std::sort(ev.data(), ev.data() + n);
  Eigen::VectorXd expected(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) expected[i] = -(alpha * (1.0 + inst.spec.lambdas[i]) + 1.0);
  expected[n - 1] = -1.0;
  std::sort(expected.data(), expected.data() + n);
  EXPECT_LT((ev - expected).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(max_abs(J.J21), 0.0);
  EXPECT_EQ(J.J11, inst.grad_h);
}

TEST(JacobianJ, ShapeChecks) {
  const auto inst = oracle::random_instance(13);
  EXPECT_THROW(jacobian_j(1.0, Eigen::MatrixXd::Identity(2, 2), inst.H, inst.kernel), ValidationError);
}

TEST(Lyapunov, ScalarAndDiagonalCases) {
  EXPECT_LT(max_abs(lyapunov_solve(-Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)) -
                    0.5 * Eigen::MatrixXd::Identity(3, 3)),
            1e-15);
  Eigen::Vector3d a(-1.0, -2.0, -5.0);
  Eigen::Matrix3d Q;
  Q << 4, 1, 2, 1, 3, 0.5, 2, 0.5, 1;
  const Eigen::MatrixXd V = lyapunov_solve(a.asDiagonal(), Q);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(V(i, j), -Q(i, j) / (a[i] + a[j]), 1e-14);
}

TEST(Lyapunov, MatchesKroneckerOracle) {
  SplitMix64 rng(14);
  for (Eigen::Index d : {1, 2, 5, 9, 16}) {
    const Eigen::MatrixXd A = random_hurwitz(d, rng);
    const Eigen::MatrixXd B = oracle::normal_matrix(d, d, rng);
    const Eigen::MatrixXd Q = B * B.transpose();
    const Eigen::MatrixXd ref = oracle::kronecker_lyapunov(A, Q);
    EXPECT_LT(max_abs(lyapunov_solve(A, Q) - ref), 1e-9 * std::max(1.0, max_abs(ref)));
  }
}

TEST(Lyapunov, NonSymmetricRightHandSide) {
  SplitMix64 rng(15);
  const Eigen::MatrixXd A = random_hurwitz(6, rng);
  const Eigen::MatrixXd Q = oracle::normal_matrix(6, 6, rng);
  EXPECT_LT(lyapunov_residual(A, lyapunov_solve(A, Q), Q), 1e-10);
}

TEST(Lyapunov, LargeResidual) {
  SplitMix64 rng(16);
  const Eigen::MatrixXd A = random_hurwitz(50, rng);
  const Eigen::MatrixXd B = oracle::normal_matrix(50, 50, rng);
  const Eigen::MatrixXd Q = B * B.transpose();
  const Eigen::MatrixXd V = lyapunov_solve(A, Q);
  EXPECT_LT(lyapunov_residual(A, V, Q) / Q.norm(), 1e-10);
  EXPECT_TRUE(is_symmetric_psd(V, 1e-8));
}

TEST(Lyapunov, RejectsNonHurwitzAndBadShapes) {
  Eigen::Matrix2d A;
  A << 0.1, 0, 0, -1;
  EXPECT_THROW(lyapunov_solve(A, Eigen::Matrix2d::Identity()), NumericalError);
  Eigen::Matrix2d rot;
  rot << 0, 1, -1, 0;
  EXPECT_THROW(lyapunov_solve(rot, Eigen::Matrix2d::Identity()), NumericalError);
  EXPECT_THROW(lyapunov_solve(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)),
               ValidationError);
  EXPECT_FALSE(is_hurwitz(A));
  EXPECT_TRUE(is_hurwitz(-Eigen::MatrixXd::Identity(2, 2)));
}

TEST(VTheta, CaseOneAtZeroEqualsCaseThree) {
  const auto inst = oracle::random_instance(17);
  EXPECT_LT(max_abs(v_theta_case1(0.0, inst.grad_h, 0.9, inst.spec, inst.H) -
                    v_theta_case3(inst.grad_h, inst.spec, inst.H)),
            1e-12);
}

TEST(VTheta, CaseOneSolvesItsEquation) {
  const auto inst = oracle::random_instance(18);
  for (double b : {0.9, 1.0}) {
    Eigen::MatrixXd A = inst.grad_h;
    if (b == 1.0) A.diagonal().array() += 0.5;
    const Eigen::MatrixXd V = v_theta_case1(3.0, inst.grad_h, b, inst.spec, inst.H);
    EXPECT_LT(lyapunov_residual(A, V, u_theta(3.0, inst.spec, inst.H)), 1e-12);
    EXPECT_TRUE(is_symmetric_psd(V));
  }
}

TEST(VTheta, OrderedInAlpha) {
  SplitMix64 rng(19);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(rng());
    const Eigen::MatrixXd V3 = v_theta_case3(inst.grad_h, inst.spec, inst.H);
    Eigen::MatrixXd prev = V3;
    for (double alpha : {0.5, 2.0, 8.0}) {
      const Eigen::MatrixXd V = v_theta_case1(alpha, inst.grad_h, 0.9, inst.spec, inst.H);
      EXPECT_TRUE(loewner_lt(V, prev));
      prev = V;
    }
  }
}

TEST(VTheta, InverseSquareRate) {
  const auto inst = oracle::random_instance(20);
  const double t1 = 1e6 * v_theta_case1(1e3, inst.grad_h, 0.9, inst.spec, inst.H).trace();
  const double t2 = 1e8 * v_theta_case1(1e4, inst.grad_h, 0.9, inst.spec, inst.H).trace();
  EXPECT_NEAR(t1 / t2, 1.0, 5e-3);
}

TEST(VCase2, BlocksAndResidual) {
  SplitMix64 rng(21);
  for (int t = 0; t < 5; ++t) {
    const auto inst = oracle::random_instance(rng());
    const double alpha = 4.0 * rng.uniform01();
    for (double b : {0.9, 1.0}) {
      const Eigen::MatrixXd V = v_case2(alpha, inst.grad_h, b, inst.spec, inst.H, inst.kernel);
      Eigen::MatrixXd A = jacobian_j(alpha, inst.grad_h, inst.H, inst.kernel).assembled();
      if (b == 1.0) A.diagonal().array() += 0.5;
      const Eigen::MatrixXd U = matrix_u(inst.spec, inst.H).assembled();
      EXPECT_LT(lyapunov_residual(A, V, U) / U.norm(), 1e-11);
      const auto D = inst.H.dim();
      const auto n = inst.kernel.size();
      EXPECT_LT(max_abs(V.bottomRightCorner(n, n) - v_x(alpha, b, inst.spec)), 1e-10);
      EXPECT_TRUE(is_symmetric_psd(V.topLeftCorner(D, D)));
    }
  }
}

TEST(Loewner, Comparisons) {
  const Eigen::Matrix2d a = Eigen::Vector2d(1, 2).asDiagonal();
  const Eigen::Matrix2d b = Eigen::Vector2d(2, 2).asDiagonal();
  const Eigen::Matrix2d c = Eigen::Vector2d(3, 1).asDiagonal();
  EXPECT_TRUE(loewner_lt(a, b));
  EXPECT_FALSE(loewner_lt(b, a));
  EXPECT_FALSE(loewner_lt(a, a));
  EXPECT_FALSE(loewner_lt(a, c));
  EXPECT_FALSE(loewner_lt(c, a));
  Eigen::Matrix2d skew;
  skew << 1, 1, 0, 1;
  EXPECT_THROW(loewner_lt(skew, b), ValidationError);
  EXPECT_THROW(loewner_lt(a, Eigen::MatrixXd::Identity(3, 3)), ValidationError);
}

TEST(Report, DispatchesOnTimescale) {
  const auto inst = oracle::random_instance(22);
  EXPECT_EQ(classify(0.8, 0.9), TimescaleCase::slow_theta);
  EXPECT_EQ(classify(0.9, 0.9), TimescaleCase::same);
  EXPECT_EQ(classify(1.0, 0.9), TimescaleCase::fast_theta);

  const auto r1 = covariance_report(2.0, 0.8, 0.9, inst.grad_h, inst.spec, inst.H, inst.kernel);
  EXPECT_LT(max_abs(r1.V_theta - v_theta_case1(2.0, inst.grad_h, 0.9, inst.spec, inst.H)), 1e-15);
  EXPECT_LT(max_abs(r1.V_x - v_x(2.0, 0.8, inst.spec)), 1e-15);

  const auto r2 = covariance_report(2.0, 0.9, 0.9, inst.grad_h, inst.spec, inst.H, inst.kernel);
  const Eigen::MatrixXd V = v_case2(2.0, inst.grad_h, 0.9, inst.spec, inst.H, inst.kernel);
  EXPECT_LT(max_abs(r2.V_theta - V.topLeftCorner(inst.H.dim(), inst.H.dim())), 1e-15);

  const auto r3 = covariance_report(2.0, 1.0, 0.9, inst.grad_h, inst.spec, inst.H, inst.kernel);
  EXPECT_LT(max_abs(r3.V_theta - v_theta_case3(inst.grad_h, inst.spec, inst.H)), 1e-15);
  for (const auto* r : {&r1, &r2, &r3}) {
    EXPECT_TRUE(is_symmetric_psd(r->V_theta));
    EXPECT_TRUE(is_symmetric_psd(r->V_x));
  }
}
