#pragma once

// Reference computations that avoid the library's own code paths.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tokenwalk/tokenwalk.hpp"

namespace tokenwalk::oracle {

/// Dense K[x] assembled entry by entry from (x_j/μ_j)^{−α} with std::pow.
inline Eigen::MatrixXd srrw_matrix(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu,
                                   const Eigen::VectorXd& x, double alpha) {
  const auto n = P.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      K(i, j) = P(i, j) * std::pow(x[j] / mu[j], -alpha);
      total += K(i, j);
    }
    K.row(i) /= total;
  }
  return K;
}

/// Stationary vector of a row-stochastic K by `iters` steps of π ← Kᵀπ.
inline Eigen::VectorXd power_iteration(const Eigen::MatrixXd& K, int iters = 10'000) {
  const auto n = K.rows();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd Kt = K.transpose();
  for (int t = 0; t < iters; ++t) {
    pi = Kt * pi;
    pi /= pi.sum();
  }
  return pi;
}

/// Central differences of f: Rⁿ → Rᵐ.
inline Eigen::MatrixXd finite_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                                  const Eigen::VectorXd& at, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(at);
  Eigen::MatrixXd J(f0.size(), at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Eigen::VectorXd up = at, down = at;
    up[j] += h;
    down[j] -= h;
    J.col(j) = (f(up) - f(down)) / (2.0 * h);
  }
  return J;
}

/// Gradient of a scalar function by central differences.
inline Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                                  const Eigen::VectorXd& at, double h = 1e-6) {
  Eigen::VectorXd g(at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Eigen::VectorXd up = at, down = at;
    up[j] += h;
    down[j] -= h;
    g[j] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

/// A V + V Aᵀ + Q = 0 through (I⊗A + A⊗I) vec(V) = −vec(Q) and dense LU.
inline Eigen::MatrixXd kronecker_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const auto d = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d * d, d * d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) {
      L.block(r * d, c * d, d, d) += I(r, c) * A;
      L.block(r * d, c * d, d, d) += A(r, c) * I;
    }
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), d * d);
  const Eigen::VectorXd v = L.partialPivLu().solve(-q);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d);
}

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotations.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd S, double tol = 1e-14, int sweeps = 100) {
  const auto n = S.rows();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += S(p, q) * S(p, q);
    if (std::sqrt(off) < tol) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(S(p, q)) < 1e-300) continue;
        const double theta = (S(q, q) - S(p, p)) / (2.0 * S(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double skp = S(k, p), skq = S(k, q);
          S(k, p) = c * skp - s * skq;
          S(k, q) = s * skp + c * skq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double spk = S(p, k), sqk = S(q, k);
          S(p, k) = c * spk - s * sqk;
          S(q, k) = s * spk + c * sqk;
        }
      }
  }
  Eigen::VectorXd ev = S.diagonal();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

/// Σ_{k=−K}^{K} Cov_μ(G(X_0), G(X_k)) for a stationary reversible chain:
/// the sampling covariance of the test function with rows G(i, ·).
inline Eigen::MatrixXd covariance_series(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu,
                                         const Eigen::MatrixXd& G, int K = 10'000) {
  const Eigen::MatrixXd Gc = G.rowwise() - (mu.transpose() * G);
  const Eigen::MatrixXd Dm = mu.asDiagonal();
  Eigen::MatrixXd Pk = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  Eigen::MatrixXd total = Gc.transpose() * Dm * Gc;
  for (int k = 1; k <= K; ++k) {
    Pk = Pk * P;
    const Eigen::MatrixXd C = Gc.transpose() * Dm * Pk * Gc;
    total += C + C.transpose();
  }
  return total;
}

/// Uniform(lo, hi) entries from a seeded stream.
inline Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi, SplitMix64& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform01();
  return v;
}

/// Interior simplex point with entries proportional to Uniform(lo, hi).
inline Eigen::VectorXd random_simplex_point(Eigen::Index n, SplitMix64& rng, double lo = 0.2, double hi = 1.0) {
  Eigen::VectorXd v = uniform_vector(n, lo, hi, rng);
  return v / v.sum();
}

/// Standard normal by Box–Muller.
inline double normal(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c, SplitMix64& rng) {
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = normal(rng);
  return M;
}

/// A random reversible test instance: MHRW kernel on a connected,
/// non-bipartite graph with a random target, a drift matrix centred so that
/// μᵀH = 0, and a Hurwitz mean-field Jacobian.
struct Instance {
  Graph graph;
  ReversibleKernel kernel;
  SpectralDecomposition spec;
  DriftMatrix H;
  Eigen::MatrixXd grad_h;
};

inline Instance random_instance(std::uint64_t seed, Node n_min = 5, Node n_max = 15, Eigen::Index D = 3,
                                bool uniform_target = false) {
  SplitMix64 rng(seed);
  const Node n = n_min + static_cast<Node>(rng.below(static_cast<std::uint64_t>(n_max - n_min + 1)));
  Graph g = connected_erdos_renyi(n, 0.4, rng());
  const TargetDistribution mu =
      uniform_target ? TargetDistribution::uniform(n) : TargetDistribution(random_simplex_point(n, rng, 0.5, 1.5));
  ReversibleKernel k = build_mhrw(g, mu);
  SpectralDecomposition spec = decompose(k);
  Eigen::MatrixXd H = normal_matrix(n, D, rng);
  H.rowwise() -= mu.values().transpose() * H;
  const Eigen::MatrixXd B = normal_matrix(D, D, rng);
  const Eigen::MatrixXd skew = 0.5 * (B - B.transpose());
  Eigen::MatrixXd grad_h = -(B * B.transpose() / static_cast<double>(D) + Eigen::MatrixXd::Identity(D, D)) + skew;
  return {std::move(g), std::move(k), std::move(spec), DriftMatrix{std::move(H)}, std::move(grad_h)};
}

}  // namespace tokenwalk::oracle
