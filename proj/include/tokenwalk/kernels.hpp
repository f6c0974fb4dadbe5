#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tokenwalk/error.hpp"
#include "tokenwalk/graph.hpp"
#include "tokenwalk/random.hpp"

namespace tokenwalk {

/// Strictly positive probability vector μ over the nodes.
class TargetDistribution {
 public:
  explicit TargetDistribution(Eigen::VectorXd mu) : mu_(std::move(mu)) {
    if (mu_.size() == 0) throw ValidationError("target distribution is empty");
    if (!(mu_.array() > 0.0).all() || !mu_.allFinite())
      throw DomainError("target distribution entries must be strictly positive");
    if (std::abs(mu_.sum() - 1.0) > 1e-12)
      throw ValidationError("target distribution does not sum to 1");
  }

  static TargetDistribution uniform(Node n) {
    return TargetDistribution(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  }

  const Eigen::VectorXd& values() const noexcept { return mu_; }
  Node size() const noexcept { return mu_.size(); }
  double operator[](Node i) const { return mu_[i]; }

 private:
  Eigen::VectorXd mu_;
};

/// Point x in the interior of the probability simplex.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Eigen::VectorXd x) : x_(std::move(x)) {
    if (x_.size() == 0) throw ValidationError("empirical measure is empty");
    if (!(x_.array() > 0.0).all() || !x_.allFinite())
      throw DomainError("empirical measure must lie in the interior of the simplex");
    if (std::abs(x_.sum() - 1.0) > 1e-12)
      throw DomainError("empirical measure does not sum to 1");
  }

  static EmpiricalMeasure uniform(Node n) {
    return EmpiricalMeasure(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  }

  const Eigen::VectorXd& values() const noexcept { return x_; }
  Node size() const noexcept { return x_.size(); }
  double operator[](Node i) const { return x_[i]; }

  /// x ← x + γ(δ_j − x). Stays interior for γ ∈ (0, 1).
  void mix_toward(Node j, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("step size gamma must lie in (0, 1)");
    x_ *= (1.0 - gamma);
    x_[j] += gamma;
  }

  void renormalize() { x_ /= x_.sum(); }

 private:
  Eigen::VectorXd x_;
};

/// Row-stochastic kernel P that is reversible with respect to μ.
class ReversibleKernel {
 public:
  /// Validates the kernel invariants. `aperiodic` is the caller's claim;
  /// build_mhrw and lazy_transform compute it.
  ReversibleKernel(Eigen::MatrixXd P, TargetDistribution mu, bool aperiodic)
      : P_(std::move(P)), mu_(std::move(mu)), aperiodic_(aperiodic) {
    const Node n = mu_.size();
    if (P_.rows() != n || P_.cols() != n)
      throw ValidationError("kernel dimension does not match target distribution");
    if ((P_.array() < 0.0).any()) throw ValidationError("kernel has negative entries");
    for (Node i = 0; i < n; ++i)
      if (std::abs(P_.row(i).sum() - 1.0) > 1e-12)
        throw ValidationError("kernel row " + std::to_string(i) + " does not sum to 1");
    for (Node i = 0; i < n; ++i)
      for (Node j = i + 1; j < n; ++j)
        if (std::abs(mu_[i] * P_(i, j) - mu_[j] * P_(j, i)) > 1e-12)
          throw ValidationError("kernel violates detailed balance at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
    support_.resize(static_cast<std::size_t>(n));
    for (Node i = 0; i < n; ++i)
      for (Node j = 0; j < n; ++j)
        if (P_(i, j) > 0.0) support_[i].push_back(j);
    log_mu_ = mu_.values().unaryExpr([](double v) { return std::log(v); });
  }

  const Eigen::MatrixXd& P() const noexcept { return P_; }
  const TargetDistribution& mu() const noexcept { return mu_; }
  bool aperiodic() const noexcept { return aperiodic_; }
  Node size() const noexcept { return mu_.size(); }

  /// Columns j with P(i, j) > 0, ascending.
  const std::vector<Node>& support(Node i) const { return support_.at(static_cast<std::size_t>(i)); }
  const Eigen::VectorXd& log_mu() const noexcept { return log_mu_; }

 private:
  Eigen::MatrixXd P_;
  TargetDistribution mu_;
  bool aperiodic_;
  std::vector<std::vector<Node>> support_;
  Eigen::VectorXd log_mu_;
};

/// Metropolis–Hastings random walk on `g` targeting μ:
/// P_ij = (1/d_i)·min{1, μ_j d_i / (μ_i d_j)} on edges, remainder on the diagonal.
inline ReversibleKernel build_mhrw(const Graph& g, const TargetDistribution& mu) {
  const Node n = g.node_count();
  if (mu.size() != n) throw ValidationError("target distribution size does not match graph");
  if (!g.connected()) throw ValidationError("graph is not connected");
  const auto deg = degrees(g);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Node i = 0; i < n; ++i) {
    const double di = static_cast<double>(deg[i]);
    double off = 0.0;
    for (Node j : g.neighbors(i)) {
      const double dj = static_cast<double>(deg[j]);
      // Written symmetrically in (i, j) so that μ_i P_ij = μ_j P_ji holds to rounding.
      const double flow = std::min(mu[i] / di, mu[j] / dj);
      P(i, j) = flow / mu[i];
      off += P(i, j);
    }
    P(i, i) = std::max(0.0, 1.0 - off);
  }
  const bool lazy_somewhere = (P.diagonal().array() > 0.0).any();
  return ReversibleKernel(std::move(P), mu, lazy_somewhere || !g.bipartite());
}

/// P' = (1 − ε)P + εI. Same μ, always aperiodic.
inline ReversibleKernel lazy_transform(const ReversibleKernel& k, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("laziness must lie in (0, 1)");
  Eigen::MatrixXd P = (1.0 - eps) * k.P();
  P.diagonal().array() += eps;
  return ReversibleKernel(std::move(P), k.mu(), true);
}

namespace detail {

inline void require_match(const ReversibleKernel& k, const EmpiricalMeasure& x) {
  if (x.size() != k.size()) throw ValidationError("measure size does not match kernel");
}

/// log (x_j/μ_j)^{−α} for every node, shifted so the maximum is 0.
inline Eigen::VectorXd repulsion_log_weights(const ReversibleKernel& k, const EmpiricalMeasure& x,
                                             double alpha) {
  Eigen::VectorXd lw = -alpha * (x.values().unaryExpr([](double v) { return std::log(v); }) - k.log_mu());
  return lw.array() - lw.maxCoeff();
}

}  // namespace detail

/// Row i of the self-repellent kernel K[x]:
/// K_ij ∝ P_ij (x_j/μ_j)^{−α}, evaluated in the log domain.
inline Eigen::VectorXd srrw_row(const ReversibleKernel& k, const EmpiricalMeasure& x, Node i,
                                double alpha) {
  detail::require_match(k, x);
  if (!std::isfinite(alpha) || alpha < 0.0) throw ValidationError("alpha must be finite and >= 0");
  if (alpha == 0.0) return k.P().row(i).transpose();
  const auto& sup = k.support(i);
  double peak = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd lw(static_cast<Node>(sup.size()));
  for (std::size_t s = 0; s < sup.size(); ++s) {
    const Node j = sup[s];
    lw[s] = -alpha * (std::log(x[j]) - k.log_mu()[j]);
    peak = std::max(peak, lw[s]);
  }
  Eigen::VectorXd row = Eigen::VectorXd::Zero(k.size());
  double total = 0.0;
  for (std::size_t s = 0; s < sup.size(); ++s) {
    const Node j = sup[s];
    row[j] = k.P()(i, j) * std::exp(lw[s] - peak);
    total += row[j];
  }
  return row / total;
}

/// Stationary distribution of K[x]:
/// π_i[x] ∝ Σ_j μ_i P_ij (x_i/μ_i)^{−α} (x_j/μ_j)^{−α}.
inline TargetDistribution srrw_stationary(const ReversibleKernel& k, const EmpiricalMeasure& x,
                                          double alpha) {
  detail::require_match(k, x);
  if (!std::isfinite(alpha) || alpha < 0.0) throw ValidationError("alpha must be finite and >= 0");
  if (alpha == 0.0) return k.mu();
  const Eigen::VectorXd w = detail::repulsion_log_weights(k, x, alpha).array().exp();
  Eigen::VectorXd pi = (k.mu().values().array() * w.array() * (k.P() * w).array()).matrix();
  pi /= pi.sum();
  return TargetDistribution(std::move(pi));
}

/// Jacobian of the mean field x ↦ π[x] − x:
/// ∂(π_i − x_i)/∂x_j = (α/x_j)(2π_iπ_j − μ_iP_ij w_i w_j / Z) − δ_ij(απ_i/x_i + 1),
/// with w = (x/μ)^{−α} and Z = Σ_lk μ_l P_lk w_l w_k.
inline Eigen::MatrixXd pi_jacobian(const ReversibleKernel& k, const EmpiricalMeasure& x,
                                   double alpha) {
  detail::require_match(k, x);
  if (!std::isfinite(alpha) || alpha < 0.0) throw ValidationError("alpha must be finite and >= 0");
  const Node n = k.size();
  const Eigen::VectorXd w = detail::repulsion_log_weights(k, x, alpha).array().exp();
  // F_ij = μ_i P_ij w_i w_j, normalized by Z.
  Eigen::MatrixXd F = (k.mu().values().array() * w.array()).matrix().asDiagonal() * k.P() *
                      w.asDiagonal();
  const double Z = F.sum();
  F /= Z;
  const Eigen::VectorXd pi = F.rowwise().sum();
  const Eigen::ArrayXd inv_x = x.values().array().inverse();

  Eigen::MatrixXd J = 2.0 * pi * pi.transpose() - F;
  J = J * (alpha * inv_x).matrix().asDiagonal();
  for (Node i = 0; i < n; ++i) J(i, i) -= alpha * pi[i] * inv_x[i] + 1.0;
  return J;
}

/// Walker position, empirical measure x_n, step counter n and repulsion α.
struct SrrwProcessState {
  Node current;
  EmpiricalMeasure x;
  std::uint64_t n = 0;
  double alpha = 0.0;
};

/// Index of the first cumulative weight exceeding `target`; falls back to the
/// last entry when rounding leaves `target` past the final sum.
inline Node inverse_cdf(const std::vector<Node>& support, const double* weights, double target) {
  double cum = 0.0;
  for (std::size_t s = 0; s < support.size(); ++s) {
    cum += weights[s];
    if (target < cum) return support[s];
  }
  return support.back();
}

/// Drives one SRRW trajectory in place, reusing scratch buffers between steps.
class SrrwWalker {
 public:
  SrrwWalker(const ReversibleKernel& kernel, SrrwProcessState state)
      : kernel_(&kernel), state_(std::move(state)) {
    detail::require_match(kernel, state_.x);
    if (state_.current < 0 || state_.current >= kernel.size())
      throw ValidationError("walker position out of range");
    if (!std::isfinite(state_.alpha) || state_.alpha < 0.0)
      throw ValidationError("alpha must be finite and >= 0");
    std::size_t widest = 0;
    for (Node i = 0; i < kernel.size(); ++i) widest = std::max(widest, kernel.support(i).size());
    scratch_.resize(widest);
  }

  const SrrwProcessState& state() const noexcept { return state_; }

  /// Draws X_{n+1} ~ K_{X_n,·}[x_n] with one uniform, then
  /// x_{n+1} = x_n + γ(δ_{X_{n+1}} − x_n).
  Node step(double gamma, SplitMix64& rng) {
    const Node next = draw(rng.uniform01());
    state_.x.mix_toward(next, gamma);
    state_.current = next;
    ++state_.n;
    if (state_.n % kRenormalizeEvery == 0) state_.x.renormalize();
    return next;
  }

  /// Next node for a given uniform u ∈ [0, 1), without changing the state.
  Node draw(double u) {
    const Node i = state_.current;
    const auto& sup = kernel_->support(i);
    const auto& P = kernel_->P();
    if (state_.alpha == 0.0) {
      for (std::size_t s = 0; s < sup.size(); ++s) scratch_[s] = P(i, sup[s]);
      return inverse_cdf(sup, scratch_.data(), u);
    }
    const auto& x = state_.x.values();
    const auto& log_mu = kernel_->log_mu();
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sup.size(); ++s) {
      const Node j = sup[s];
      scratch_[s] = -state_.alpha * (std::log(x[j]) - log_mu[j]);
      peak = std::max(peak, scratch_[s]);
    }
    double total = 0.0;
    for (std::size_t s = 0; s < sup.size(); ++s) {
      scratch_[s] = P(i, sup[s]) * std::exp(scratch_[s] - peak);
      total += scratch_[s];
    }
    return inverse_cdf(sup, scratch_.data(), u * total);
  }

  static constexpr std::uint64_t kRenormalizeEvery = 1'000'000;

 private:
  const ReversibleKernel* kernel_;
  SrrwProcessState state_;
  std::vector<double> scratch_;
};

/// One SA-SRRW sampling step on a copy of `state`.
inline SrrwProcessState srrw_step(const SrrwProcessState& state, const ReversibleKernel& k,
                                  double gamma_next, SplitMix64& rng) {
  SrrwWalker walker(k, state);
  walker.step(gamma_next, rng);
  return walker.state();
}

/// Row-major CSV: first line N, then N lines of N comma-separated entries.
inline void write_kernel_csv(const ReversibleKernel& k, std::ostream& out) {
  out << k.size() << '\n';
  out.precision(17);
  for (Node i = 0; i < k.size(); ++i) {
    for (Node j = 0; j < k.size(); ++j) out << (j ? "," : "") << k.P()(i, j);
    out << '\n';
  }
}

/// Reads the matrix written by write_kernel_csv.
inline Eigen::MatrixXd read_kernel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing kernel size header");
  Node n = 0;
  try {
    n = std::stoll(line);
  } catch (const std::exception&) {
    throw ParseError(1, "invalid kernel size header");
  }
  if (n <= 0) throw ParseError(1, "invalid kernel size header");
  Eigen::MatrixXd P(n, n);
  for (Node i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw ParseError(static_cast<std::size_t>(i + 2), "missing row");
    std::istringstream fields(line);
    std::string cell;
    for (Node j = 0; j < n; ++j) {
      if (!std::getline(fields, cell, ','))
        throw ParseError(static_cast<std::size_t>(i + 2), "too few columns");
      try {
        P(i, j) = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(static_cast<std::size_t>(i + 2), "invalid number '" + cell + "'");
      }
    }
  }
  return P;
}

}  // namespace tokenwalk
