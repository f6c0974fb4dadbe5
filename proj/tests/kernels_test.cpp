#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "tokenwalk/kernels.hpp"
#include "tokenwalk_verify/oracles.hpp"

using namespace tokenwalk;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

ReversibleKernel path3() { return build_mhrw(path_graph(3), TargetDistribution::uniform(3)); }

}  // namespace

TEST(Mhrw, PathOfThreeUniform) {
  const auto k = path3();
  Eigen::Matrix3d expected;
  expected << 0.5, 0.5, 0, 0.5, 0, 0.5, 0, 0.5, 0.5;
  EXPECT_LT((k.P() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(k.aperiodic());
}

TEST(Mhrw, EdgeIsPeriodic) {
  const auto k = build_mhrw(path_graph(2), TargetDistribution::uniform(2));
  EXPECT_FALSE(k.aperiodic());
  EXPECT_DOUBLE_EQ(k.P()(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(k.P()(1, 0), 1.0);
}

TEST(Mhrw, DetailedBalanceOnRandomTargets) {
  SplitMix64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const Graph g = connected_erdos_renyi(9, 0.35, rng());
    const TargetDistribution mu(oracle::random_simplex_point(9, rng, 0.1, 1.0));
    const auto k = build_mhrw(g, mu);
    const Eigen::MatrixXd flow = mu.values().asDiagonal() * k.P();
    EXPECT_LT((flow - flow.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((k.P().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
    EXPECT_LT((k.P().transpose() * mu.values() - mu.values()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Mhrw, RejectsDisconnectedGraphAndSizeMismatch) {
  const Graph g = Graph::from_edges(4, {{0, 1}, {2, 3}});
  EXPECT_THROW(build_mhrw(g, TargetDistribution::uniform(4)), ValidationError);
  EXPECT_THROW(build_mhrw(path_graph(3), TargetDistribution::uniform(4)), ValidationError);
}

TEST(LazyTransform, MakesEdgeAperiodic) {
  const auto k = lazy_transform(build_mhrw(path_graph(2), TargetDistribution::uniform(2)), 0.5);
  EXPECT_TRUE(k.aperiodic());
  EXPECT_DOUBLE_EQ(k.P()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(k.P()(0, 1), 0.5);
  EXPECT_THROW(lazy_transform(k, 0.0), ValidationError);
  EXPECT_THROW(lazy_transform(k, 1.0), ValidationError);
}

TEST(ReversibleKernel, ValidatesInvariants) {
  const auto mu = TargetDistribution::uniform(2);
  Eigen::Matrix2d bad_row;
  bad_row << 0.5, 0.4, 0.5, 0.5;
  EXPECT_THROW(ReversibleKernel(bad_row, mu, true), ValidationError);
  Eigen::Matrix2d negative;
  negative << 1.5, -0.5, 0.5, 0.5;
  EXPECT_THROW(ReversibleKernel(negative, mu, true), ValidationError);
  Eigen::Matrix2d irreversible;
  irreversible << 0.5, 0.5, 0.2, 0.8;
  EXPECT_THROW(ReversibleKernel(irreversible, mu, true), ValidationError);
}

TEST(Measures, DomainChecks) {
  EXPECT_THROW(EmpiricalMeasure(vec({0.0, 1.0})), DomainError);
  EXPECT_THROW(EmpiricalMeasure(vec({0.5, 0.6})), DomainError);
  EXPECT_THROW(TargetDistribution(vec({-0.5, 1.5})), DomainError);
  EXPECT_THROW(TargetDistribution(vec({0.5, 0.6})), ValidationError);
  auto x = EmpiricalMeasure::uniform(2);
  EXPECT_THROW(x.mix_toward(0, 1.0), DomainError);
  EXPECT_THROW(x.mix_toward(0, 0.0), DomainError);
  x.mix_toward(0, 0.5);
  EXPECT_DOUBLE_EQ(x[0], 0.75);
  EXPECT_DOUBLE_EQ(x[1], 0.25);
}

TEST(SrrwRow, ReducesToBaseChain) {
  const auto k = path3();
  const EmpiricalMeasure skewed(vec({0.5, 0.3, 0.2}));
  for (Node i = 0; i < 3; ++i) {
    EXPECT_EQ(srrw_row(k, skewed, i, 0.0), k.P().row(i).transpose());
    EXPECT_LT((srrw_row(k, EmpiricalMeasure::uniform(3), i, 7.0) - k.P().row(i).transpose())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
  }
}

TEST(SrrwRow, MatchesExtendedPrecision) {
  const auto k = path3();
  const EmpiricalMeasure x(vec({0.5, 0.3, 0.2}));
  const double alpha = 2.0;
  for (Node i = 0; i < 3; ++i) {
    long double w[3], total = 0;
    for (Node j = 0; j < 3; ++j) {
      w[j] = static_cast<long double>(k.P()(i, j)) *
             std::pow(static_cast<long double>(x[j]) * 3.0L, -static_cast<long double>(alpha));
      total += w[j];
    }
    const auto row = srrw_row(k, x, i, alpha);
    for (Node j = 0; j < 3; ++j) EXPECT_NEAR(row[j], static_cast<double>(w[j] / total), 1e-15);
  }
  // Middle row: weights 0.5/2.25 and 0.5/0.36 normalise to 0.36/2.61 and 2.25/2.61.
  const auto mid = srrw_row(k, x, 1, alpha);
  EXPECT_NEAR(mid[0], 0.36 / 2.61, 1e-15);
  EXPECT_NEAR(mid[2], 2.25 / 2.61, 1e-15);
}

TEST(SrrwRow, StableForExtremeRepulsion) {
  const auto k = path3();
  const EmpiricalMeasure x(vec({1e-12, 0.5, 0.5 - 1e-12}));
  const auto row = srrw_row(k, x, 1, 500.0);
  EXPECT_TRUE(row.allFinite());
  EXPECT_NEAR(row.sum(), 1.0, 1e-15);
  EXPECT_NEAR(row[0], 1.0, 1e-15);
}

TEST(SrrwRow, RejectsBadArguments) {
  const auto k = path3();
  EXPECT_THROW(srrw_row(k, EmpiricalMeasure::uniform(4), 0, 1.0), ValidationError);
  EXPECT_THROW(srrw_row(k, EmpiricalMeasure::uniform(3), 0, -1.0), ValidationError);
  EXPECT_THROW(srrw_row(k, EmpiricalMeasure::uniform(3), 0, std::nan("")), ValidationError);
}

TEST(SrrwStationary, ReversibleAndStationary) {
  SplitMix64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto inst = oracle::random_instance(rng());
    const auto& k = inst.kernel;
    const EmpiricalMeasure x(oracle::random_simplex_point(k.size(), rng));
    const double alpha = 10.0 * rng.uniform01();
    const Eigen::VectorXd pi = srrw_stationary(k, x, alpha).values();
    Eigen::MatrixXd K(k.size(), k.size());
    for (Node i = 0; i < k.size(); ++i) K.row(i) = srrw_row(k, x, i, alpha).transpose();
    const Eigen::MatrixXd flow = pi.asDiagonal() * K;
    EXPECT_LT((flow - flow.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((K.transpose() * pi - pi).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(SrrwStationary, EqualsTargetAtTarget) {
  const auto inst = oracle::random_instance(3);
  const EmpiricalMeasure at_mu(inst.kernel.mu().values());
  for (double alpha : {0.0, 1.0, 25.0})
    EXPECT_LT((srrw_stationary(inst.kernel, at_mu, alpha).values() - inst.kernel.mu().values())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
}

TEST(PiJacobian, MinusIdentityWithoutRepulsion) {
  const auto inst = oracle::random_instance(8);
  SplitMix64 rng(1);
  const EmpiricalMeasure x(oracle::random_simplex_point(inst.kernel.size(), rng));
  const auto n = inst.kernel.size();
  EXPECT_LT((pi_jacobian(inst.kernel, x, 0.0) + Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(PiJacobian, MatchesFiniteDifferences) {
  SplitMix64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(rng());
    const auto& k = inst.kernel;
    const Eigen::VectorXd x = oracle::random_simplex_point(k.size(), rng);
    const double alpha = 5.0 * rng.uniform01();
    auto field = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
      return srrw_stationary(k, EmpiricalMeasure(y / y.sum()), alpha).values() - y;
    };
    const Eigen::MatrixXd fd = oracle::finite_difference_jacobian(field, x, 1e-7);
    EXPECT_LT((pi_jacobian(k, EmpiricalMeasure(x), alpha) - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(PiJacobian, AtTargetHasClosedForm) {
  const auto inst = oracle::random_instance(17);
  const auto& k = inst.kernel;
  const auto n = k.size();
  const double alpha = 3.0;
  const Eigen::MatrixXd expected = 2.0 * alpha * k.mu().values() * Eigen::RowVectorXd::Ones(n) -
                                   alpha * k.P().transpose() - (alpha + 1.0) * Eigen::MatrixXd::Identity(n, n);
  EXPECT_LT((pi_jacobian(k, EmpiricalMeasure(k.mu().values()), alpha) - expected).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(SrrwStep, UpdatesMeasureAndCounter) {
  const auto k = path3();
  SplitMix64 rng(99);
  const SrrwProcessState s0{0, EmpiricalMeasure::uniform(3), 0, 1.0};
  const auto s1 = srrw_step(s0, k, 0.5, rng);
  EXPECT_EQ(s1.n, 1u);
  ASSERT_TRUE(s1.current == 0 || s1.current == 1);
  Eigen::VectorXd expected = Eigen::VectorXd::Constant(3, 1.0 / 6.0);
  expected[s1.current] += 0.5;
  EXPECT_LT((s1.x.values() - expected).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_EQ(s0.n, 0u);
}

TEST(SrrwWalker, DrawInvertsCdf) {
  const auto k = path3();
  SrrwWalker w(k, {1, EmpiricalMeasure::uniform(3), 0, 0.0});
  EXPECT_EQ(w.draw(0.0), 0);
  EXPECT_EQ(w.draw(0.4999), 0);
  EXPECT_EQ(w.draw(0.5), 2);
  EXPECT_EQ(w.draw(0.9999999), 2);
}

TEST(SrrwWalker, RejectsBadStart) {
  const auto k = path3();
  EXPECT_THROW(SrrwWalker(k, {3, EmpiricalMeasure::uniform(3), 0, 0.0}), ValidationError);
  EXPECT_THROW(SrrwWalker(k, {0, EmpiricalMeasure::uniform(3), 0, -2.0}), ValidationError);
}

TEST(SrrwWalker, SameSeedSameTrajectory) {
  const auto k = build_mhrw(connected_erdos_renyi(10, 0.4, 2), TargetDistribution::uniform(10));
  auto run = [&](std::uint64_t seed) {
    SplitMix64 rng(seed);
    SrrwWalker w(k, {0, EmpiricalMeasure::uniform(10), 0, 3.0});
    std::vector<Node> path;
    for (int t = 1; t <= 2000; ++t) path.push_back(w.step(1.0 / (t + 1.0), rng));
    return std::make_pair(path, w.state().x.values());
  };
  const auto a = run(42), b = run(42), c = run(43);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.first, c.first);
}

TEST(SrrwWalker, BaseChainVisitFrequencies) {
  const auto k = path3();
  SplitMix64 rng(7);
  SrrwWalker w(k, {0, EmpiricalMeasure::uniform(3), 0, 0.0});
  const int steps = 300'000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (int t = 0; t < steps; ++t) counts[w.step(0.5, rng)] += 1.0;
  counts /= steps;
  // Spectral gap 1/2 bounds the asymptotic variance by 3 · (1/3)(2/3).
  const double se = std::sqrt(2.0 / 3.0 / steps);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(counts[i], 1.0 / 3.0, 3.0 * se);
}

TEST(SrrwWalker, RepulsiveMeasureConvergesToTarget) {
  SplitMix64 pick(4);
  const Graph g = connected_erdos_renyi(8, 0.5, 12);
  const TargetDistribution mu(oracle::random_simplex_point(8, pick));
  const auto k = build_mhrw(g, mu);
  SplitMix64 rng(3);
  SrrwWalker w(k, {0, EmpiricalMeasure::uniform(8), 0, 5.0});
  for (int t = 1; t <= 200'000; ++t) w.step(1.0 / (t + 1.0), rng);
  EXPECT_LT((w.state().x.values() - mu.values()).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(KernelCsv, RoundTripIsExact) {
  const auto inst = oracle::random_instance(31);
  std::stringstream s;
  write_kernel_csv(inst.kernel, s);
  EXPECT_EQ(read_kernel_csv(s), inst.kernel.P());
}

TEST(KernelCsv, MalformedInput) {
  std::istringstream empty("");
  EXPECT_THROW(read_kernel_csv(empty), ParseError);
  std::istringstream bad_header("x\n");
  EXPECT_THROW(read_kernel_csv(bad_header), ParseError);
  std::istringstream short_row("2\n1,0\n0.5\n");
  try {
    read_kernel_csv(short_row);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
