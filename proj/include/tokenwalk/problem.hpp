#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "tokenwalk/covariance.hpp"
#include "tokenwalk/error.hpp"
#include "tokenwalk/graph.hpp"
#include "tokenwalk/kernels.hpp"
#include "tokenwalk/objectives.hpp"
#include "tokenwalk/random.hpp"
#include "tokenwalk/spectral.hpp"

namespace tokenwalk {

inline ObjectiveKind parse_objective_kind(std::string_view s) {
  if (s == "logistic") return ObjectiveKind::logistic;
  if (s == "ncreg") return ObjectiveKind::ncreg;
  if (s == "quad" || s == "quadratic") return ObjectiveKind::quadratic;
  throw ValidationError("unknown objective '" + std::string(s) + "' (expected logistic, ncreg or quad)");
}

inline DriftVariant parse_drift_variant(std::string_view s) {
  if (s == "sgd") return DriftVariant::sgd;
  if (s == "shb") return DriftVariant::shb;
  if (s == "momentum") return DriftVariant::momentum;
  throw ValidationError("unknown variant '" + std::string(s) + "' (expected sgd, shb or momentum)");
}

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::logistic: return "logistic";
    case ObjectiveKind::ncreg: return "ncreg";
    case ObjectiveKind::quadratic: return "quad";
  }
  return "?";
}

inline const char* to_string(DriftVariant v) {
  switch (v) {
    case DriftVariant::sgd: return "sgd";
    case DriftVariant::shb: return "shb";
    case DriftVariant::momentum: return "momentum";
  }
  return "?";
}

/// Everything needed to build an experiment instance.
struct ProblemSpec {
  Graph graph;
  ObjectiveKind objective = ObjectiveKind::logistic;
  DriftVariant variant = DriftVariant::sgd;
  std::optional<Dataset> dataset;  ///< required for logistic and ncreg
  Eigen::Index features = 2;       ///< quad dimension
  double kappa = 1.0;
  std::uint64_t data_seed = 0;     ///< quad centres
  double epsilon = 1e-8;
  double lazy = 0.0;               ///< lazy_transform weight, 0 disables it
  double b_exponent = 0.9;
};

/// The graph restricted to its largest component, the MHRW chain targeting
/// the uniform distribution, the objective, its drift and its root.
struct Problem {
  Graph graph;
  ReversibleKernel kernel;
  Objective objective;
  DriftField drift;
  ThetaStar star;
};

/// Quad centres: standard normal rows from the seeded stream.
inline Eigen::MatrixXd random_centers(Node n, Eigen::Index dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd C(n, dim);
  for (Node i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double u1 = 1.0 - rng.uniform01();
      const double u2 = rng.uniform01();
      C(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
  return C;
}

inline Problem build_problem(const ProblemSpec& spec) {
  Graph g = spec.graph.connected() ? spec.graph : largest_connected_component(spec.graph);
  ReversibleKernel k = build_mhrw(g, TargetDistribution::uniform(g.node_count()));
  if (spec.lazy > 0.0) k = lazy_transform(k, spec.lazy);

  auto objective = [&] {
    if (spec.objective == ObjectiveKind::quadratic) {
      if (spec.features < 1) throw ValidationError("quad objective needs a positive dimension");
      return Objective::quadratic(random_centers(g.node_count(), spec.features, spec.data_seed));
    }
    if (!spec.dataset) throw ValidationError(std::string(to_string(spec.objective)) + " objective needs a dataset");
    return Objective::from_dataset(spec.objective, *spec.dataset, assign_to_nodes(*spec.dataset, g), spec.kappa);
  }();
  DriftField drift = make_drift(objective, spec.variant, spec.epsilon);
  SolverOptions opt;
  opt.b_exponent = spec.b_exponent;
  ThetaStar star = solve_theta_star(drift, k.mu().values(), opt);
  return {std::move(g), std::move(k), std::move(objective), std::move(drift), std::move(star)};
}

}  // namespace tokenwalk
