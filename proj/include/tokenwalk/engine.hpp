#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tokenwalk/covariance.hpp"
#include "tokenwalk/error.hpp"
#include "tokenwalk/kernels.hpp"
#include "tokenwalk/objectives.hpp"
#include "tokenwalk/random.hpp"

namespace tokenwalk {

/// β_n = (n+1)^{−b} for the optimization iterate, γ_n = (n+1)^{−a} for the
/// empirical measure; a, b ∈ (0.5, 1].
class StepSchedule {
 public:
  StepSchedule(double a, double b) : a_(a), b_(b) {
    if (!(a > 0.5 && a <= 1.0)) throw ValidationError("gamma exponent a must lie in (0.5, 1]");
    if (!(b > 0.5 && b <= 1.0)) throw ValidationError("beta exponent b must lie in (0.5, 1]");
  }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  TimescaleCase timescale() const noexcept { return classify(a_, b_); }

  double beta(std::uint64_t n) const { return std::pow(static_cast<double>(n) + 1.0, -b_); }
  double gamma(std::uint64_t n) const { return std::pow(static_cast<double>(n) + 1.0, -a_); }

 private:
  double a_;
  double b_;
};

struct StepSizes {
  double beta;
  double gamma;
};

inline StepSizes schedule_eval(const StepSchedule& s, std::uint64_t n) {
  return {s.beta(n), s.gamma(n)};
}

/// Presets for the three regimes with b = 0.9: a = 0.8, 0.9, 1.
inline StepSchedule schedule_for_case(TimescaleCase c) {
  switch (c) {
    case TimescaleCase::slow_theta: return {0.8, 0.9};
    case TimescaleCase::same: return {0.9, 0.9};
    case TimescaleCase::fast_theta: return {1.0, 0.9};
  }
  throw ValidationError("unknown timescale case");
}

/// Log-spaced step indices in [1, n_steps]: `per_decade` points per decade,
/// at most `cap` in total, always ending at n_steps.
inline std::vector<std::uint64_t> log_grid(std::uint64_t n_steps, std::size_t per_decade = 200,
                                           std::size_t cap = 1000) {
  if (n_steps == 0) return {};
  const double decades = std::log10(static_cast<double>(n_steps));
  const std::size_t wanted = std::max<std::size_t>(
      2, std::min<std::size_t>(cap, static_cast<std::size_t>(std::ceil(decades * per_decade)) + 1));
  std::vector<std::uint64_t> grid;
  grid.reserve(wanted);
  for (std::size_t k = 0; k < wanted; ++k) {
    const double e = decades * static_cast<double>(k) / static_cast<double>(wanted - 1);
    auto idx = static_cast<std::uint64_t>(std::llround(std::pow(10.0, e)));
    idx = std::clamp<std::uint64_t>(idx, 1, n_steps);
    if (grid.empty() || idx > grid.back()) grid.push_back(idx);
  }
  if (grid.back() != n_steps) grid.push_back(n_steps);
  return grid;
}

struct RecordSpec {
  std::vector<std::uint64_t> indices;  ///< strictly increasing, each in [1, n_steps]
  bool record_x = true;
};

/// Snapshot of the coupled state at the recorded step indices.
struct TrajectoryRecord {
  std::vector<std::uint64_t> indices;
  std::vector<Eigen::VectorXd> z;
  std::vector<Eigen::VectorXd> x;  ///< empty when RecordSpec::record_x is false
  std::vector<Node> nodes;
  Eigen::VectorXd final_z;
  Eigen::VectorXd final_x;
  Node final_node = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

struct RunOptions {
  std::optional<Eigen::VectorXd> x0;  ///< default uniform
  std::optional<Node> start_node;     ///< default uniform draw from the seeded stream
  std::optional<Eigen::VectorXd> z0;  ///< default 0
  double divergence_threshold = 1e8;
  /// Radius of an optional Euclidean ball projection on z; 0 disables it.
  double projection_radius = 0.0;
  std::uint64_t config_hash = 0;
};

/// Runs the coupled recursion for n_steps steps:
///   X_{n+1} ~ K_{X_n,·}[x_n]
///   x_{n+1} = x_n + γ_{n+1}(δ_{X_{n+1}} − x_n)
///   z_{n+1} = z_n + β_{n+1} H(z_n, X_{n+1})
/// Throws NumericalError once ‖z_n‖ exceeds the divergence threshold.
inline TrajectoryRecord run_sa_srrw(const ReversibleKernel& k, const DriftField& drift,
                                    const StepSchedule& s, double alpha, std::uint64_t n_steps,
                                    std::uint64_t seed, const RecordSpec& record,
                                    const RunOptions& opt = {}) {
  const Node n = k.size();
  if (drift.objective().nodes() != n) throw ValidationError("objective node count does not match kernel");
  if (n_steps < 1) throw ValidationError("need at least one step");
  for (std::size_t r = 0; r < record.indices.size(); ++r)
    if (record.indices[r] < 1 || record.indices[r] > n_steps ||
        (r > 0 && record.indices[r] <= record.indices[r - 1]))
      throw ValidationError("record indices must be strictly increasing within [1, n_steps]");

  SplitMix64 rng(seed);
  EmpiricalMeasure x0 = opt.x0 ? EmpiricalMeasure(*opt.x0) : EmpiricalMeasure::uniform(n);
  Node start = 0;
  if (opt.start_node) {
    start = *opt.start_node;
  } else {
    start = static_cast<Node>(rng.below(static_cast<std::uint64_t>(n)));
  }
  SrrwWalker walker(k, SrrwProcessState{start, std::move(x0), 0, alpha});

  Eigen::VectorXd z = opt.z0 ? *opt.z0 : Eigen::VectorXd::Zero(drift.dim());
  if (z.size() != drift.dim()) throw ValidationError("initial iterate has wrong dimension");
  Eigen::VectorXd h(drift.dim());

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.config_hash = opt.config_hash;
  rec.indices = record.indices;
  rec.z.reserve(record.indices.size());
  if (record.record_x) rec.x.reserve(record.indices.size());
  rec.nodes.reserve(record.indices.size());
  std::size_t next_record = 0;

  const double limit2 = opt.divergence_threshold * opt.divergence_threshold;
  for (std::uint64_t step = 0; step < n_steps; ++step) {
    const std::uint64_t m = step + 1;
    const Node X = walker.step(s.gamma(m), rng);
    drift.evaluate(z, X, h);
    z.noalias() += s.beta(m) * h;
    if (opt.projection_radius > 0.0) {
      const double r = z.norm();
      if (r > opt.projection_radius) z *= opt.projection_radius / r;
    }
    const double z2 = z.squaredNorm();
    if (!(z2 <= limit2))
      throw NumericalError("iterate diverged at step " + std::to_string(m) + " (norm " +
                           std::to_string(std::sqrt(z2)) + ")");
    if (next_record < record.indices.size() && record.indices[next_record] == m) {
      rec.z.push_back(z);
      if (record.record_x) rec.x.push_back(walker.state().x.values());
      rec.nodes.push_back(X);
      ++next_record;
    }
  }
  rec.final_z = std::move(z);
  rec.final_x = walker.state().x.values();
  rec.final_node = walker.state().current;
  return rec;
}

/// Closed form of the recursion for a visit path X_1..X_n:
/// x_n = (Σ_{i=1}^n ω_i δ_{X_i} + ω_0 x_0) / Σ_{i=0}^n ω_i with ω_0 = 1 and
/// ω_i = γ_i / Π_{k=1}^{i} (1 − γ_k).
inline Eigen::VectorXd weighted_measure(const std::vector<Node>& path, const Eigen::VectorXd& x0,
                                        const StepSchedule& s) {
  Eigen::VectorXd acc = x0;
  double total = 1.0;
  double survival = 1.0;  // Π (1 − γ_k)
  for (std::size_t i = 1; i <= path.size(); ++i) {
    const double g = s.gamma(i);
    if (!(g < 1.0)) throw DomainError("step size gamma_" + std::to_string(i) + " is not below 1");
    survival *= (1.0 - g);
    const double w = g / survival;
    const Node v = path[i - 1];
    if (v < 0 || v >= x0.size()) throw ValidationError("path visits a node out of range");
    acc[v] += w;
    total += w;
    if (total > 1e200) {
      acc /= total;
      survival *= total;
      total = 1.0;
    }
  }
  return acc / total;
}

}  // namespace tokenwalk
