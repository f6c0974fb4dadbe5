#include <gtest/gtest.h>

#include "tokenwalk/spectral.hpp"
#include "tokenwalk_verify/oracles.hpp"

using namespace tokenwalk;

TEST(Decompose, PathOfThreeSpectrum) {
  const auto s = decompose(build_mhrw(path_graph(3), TargetDistribution::uniform(3)));
  ASSERT_EQ(s.size(), 3);
  EXPECT_NEAR(s.lambdas[0], -0.5, 1e-15);
  EXPECT_NEAR(s.lambdas[1], 0.5, 1e-15);
  EXPECT_EQ(s.lambdas[2], 1.0);
}

TEST(Decompose, LazyEdge) {
  const auto k = lazy_transform(build_mhrw(path_graph(2), TargetDistribution::uniform(2)), 0.5);
  const auto s = decompose(k);
  EXPECT_NEAR(s.lambdas[0], 0.0, 1e-15);
  EXPECT_EQ(s.lambdas[1], 1.0);
}

TEST(Decompose, PeriodicChainIsRejected) {
  EXPECT_THROW(decompose(build_mhrw(path_graph(2), TargetDistribution::uniform(2))), NumericalError);
  EXPECT_THROW(decompose(build_mhrw(cycle_graph(4), TargetDistribution::uniform(4))), NumericalError);
}

TEST(Decompose, ReducibleChainIsRejected) {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(decompose(ReversibleKernel(I, TargetDistribution::uniform(3), true)), NumericalError);
}

TEST(Decompose, MatchesJacobiOracle) {
  SplitMix64 rng(2);
  for (int t = 0; t < 25; ++t) {
    const auto inst = oracle::random_instance(rng(), 4, 20);
    const Eigen::ArrayXd r = inst.kernel.mu().values().array().sqrt();
    const Eigen::MatrixXd S = r.matrix().asDiagonal() * inst.kernel.P() * r.inverse().matrix().asDiagonal();
    const Eigen::VectorXd ref = oracle::jacobi_eigenvalues(0.5 * (S + S.transpose()));
    EXPECT_LT((inst.spec.lambdas - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Decompose, EigenpairsAndBiorthonormality) {
  SplitMix64 rng(3);
  for (int t = 0; t < 25; ++t) {
    const auto inst = oracle::random_instance(rng(), 4, 20);
    const auto& s = inst.spec;
    const auto& P = inst.kernel.P();
    const auto n = s.size();
    EXPECT_LT((P * s.right - s.right * s.lambdas.asDiagonal()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((P.transpose() * s.left - s.left * s.lambdas.asDiagonal()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s.left.transpose() * s.right - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(s.right.col(n - 1), Eigen::VectorXd::Ones(n));
    EXPECT_LT((s.left.col(n - 1) - s.mu).cwiseAbs().maxCoeff(), 1e-15);
    const Eigen::MatrixXd recon = s.right * s.lambdas.asDiagonal() * s.left.transpose();
    EXPECT_LT((recon - P).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 1; i < n; ++i) EXPECT_LE(s.lambdas[i - 1], s.lambdas[i]);
  }
}

TEST(Decompose, SignRuleMakesLargestEntryPositive) {
  const auto inst = oracle::random_instance(44, 6, 12);
  const auto& R = inst.spec.right;
  for (Eigen::Index i = 0; i + 1 < R.cols(); ++i) {
    Eigen::Index arg = 0;
    R.col(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(R(arg, i), 0.0);
  }
}

TEST(Decompose, RelabellingPermutesSpectrumOnly) {
  const auto inst = oracle::random_instance(12, 7, 7);
  const auto n = inst.kernel.size();
  Eigen::VectorXi perm(n);
  for (Eigen::Index i = 0; i < n; ++i) perm[i] = static_cast<int>((i * 3 + 2) % n);
  const Eigen::PermutationMatrix<Eigen::Dynamic> Pm(perm);
  const Eigen::MatrixXd P2 = Pm * inst.kernel.P() * Pm.transpose();
  const Eigen::VectorXd mu2 = Pm * inst.kernel.mu().values();
  const auto s2 = decompose(ReversibleKernel(P2, TargetDistribution(mu2), true));
  EXPECT_LT((s2.lambdas - inst.spec.lambdas).cwiseAbs().maxCoeff(), 1e-12);
}
