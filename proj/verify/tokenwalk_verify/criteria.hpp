#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tokenwalk/problem.hpp"
#include "tokenwalk/tokenwalk.hpp"
#include "tokenwalk_verify/oracles.hpp"

namespace tokenwalk::verify {

struct Options {
  std::uint64_t seed = 1;
  bool quick = false;  ///< skip the Monte-Carlo criteria
  unsigned threads = default_thread_count();
  std::string data_dir;  ///< holds synthetic62.edges and ijcnn1_like.libsvm
  std::string cli;       ///< tokenwalk executable for the determinism check
};

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string summary;
};

struct Criterion {
  int id;
  std::string name;
  bool monte_carlo;
  std::function<Outcome(const Options&)> run;
};

namespace detail {

inline std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

inline Outcome verdict(bool ok, std::string text) { return {ok ? Status::pass : Status::fail, std::move(text)}; }

inline Dataset load_stand_in_dataset(const Options& o) {
  return load_libsvm_file((std::filesystem::path(o.data_dir) / "ijcnn1_like.libsvm").string(), 22);
}

inline Graph load_stand_in_graph(const Options& o) {
  return load_edge_list_file((std::filesystem::path(o.data_dir) / "synthetic62.edges").string());
}

inline Problem stand_in_problem(const Options& o, ObjectiveKind kind = ObjectiveKind::logistic,
                                DriftVariant variant = DriftVariant::sgd, double b = 0.9) {
  ProblemSpec ps;
  ps.graph = load_stand_in_graph(o);
  ps.objective = kind;
  ps.variant = variant;
  ps.dataset = load_stand_in_dataset(o);
  ps.kappa = 1.0;
  ps.b_exponent = b;
  return build_problem(ps);
}

/// Seeded 8-node graph for the CLT checks.
inline Graph clt_graph(std::uint64_t seed) { return connected_erdos_renyi(8, 0.5, seed * 7919 + 8); }

inline double max_abs(const Eigen::MatrixXd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace detail

/// 1. srrw_row reduces to P at α = 0 and x = μ; MHRW detailed balance.
inline Outcome kernel_identities(const Options& o) {
  SplitMix64 rng(o.seed);
  double worst_row = 0.0, worst_balance = 0.0, worst_sum = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Node n = 3 + static_cast<Node>(rng.below(28));
    const double p = 0.15 + 0.45 * rng.uniform01();
    const Graph g = connected_erdos_renyi(n, p, rng());
    const TargetDistribution mu(oracle::random_simplex_point(n, rng, 0.5, 1.5));
    const ReversibleKernel k = build_mhrw(g, mu);
    const auto& P = k.P();
    for (Node i = 0; i < n; ++i)
      for (Node j = 0; j < n; ++j)
        worst_balance = std::max(worst_balance, std::abs(mu[i] * P(i, j) - mu[j] * P(j, i)));
    worst_sum = std::max(worst_sum, (P.rowwise().sum().array() - 1.0).abs().maxCoeff());
    const EmpiricalMeasure x(oracle::random_simplex_point(n, rng));
    const EmpiricalMeasure at_mu(mu.values());
    const double alpha = 0.5 + 49.5 * rng.uniform01();
    for (Node i = 0; i < n; ++i) {
      worst_row = std::max(worst_row, (srrw_row(k, x, i, 0.0) - P.row(i).transpose()).cwiseAbs().maxCoeff());
      worst_row = std::max(worst_row, (srrw_row(k, at_mu, i, alpha) - P.row(i).transpose()).cwiseAbs().maxCoeff());
    }
  }
  return detail::verdict(worst_row <= 1e-14 && worst_balance <= 1e-12 && worst_sum <= 1e-12,
                         "row error " + detail::fmt(worst_row) + ", balance error " + detail::fmt(worst_balance) +
                             ", row-sum error " + detail::fmt(worst_sum));
}

/// 2. Stationary distribution against power iteration on K[x]ᵀ.
inline Outcome stationary_oracle(const Options& o) {
  SplitMix64 rng(o.seed + 2);
  const double alphas[] = {0.5, 2.0, 10.0};
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Node n = 4 + static_cast<Node>(rng.below(9));
    const Graph g = connected_erdos_renyi(n, 0.4, rng());
    const TargetDistribution mu(oracle::random_simplex_point(n, rng, 0.5, 1.5));
    const ReversibleKernel k = build_mhrw(g, mu);
    const Eigen::VectorXd x = oracle::random_simplex_point(n, rng);
    const double alpha = alphas[t % 3];
    const Eigen::VectorXd pi = srrw_stationary(k, EmpiricalMeasure(x), alpha).values();
    const Eigen::VectorXd ref =
        oracle::power_iteration(oracle::srrw_matrix(k.P(), mu.values(), x, alpha), 100'000);
    worst = std::max(worst, (pi - ref).cwiseAbs().maxCoeff());
  }
  return detail::verdict(worst <= 1e-10, "max-norm error " + detail::fmt(worst));
}

/// 3. Closed-form Jacobian of π[x] − x at μ and at random interior x.
inline Outcome jacobian_checks(const Options& o) {
  double worst_mu = 0.0, worst_fd = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto inst = oracle::random_instance(o.seed * 100 + 30 + t);
    const auto& k = inst.kernel;
    const Node n = k.size();
    for (double alpha : {0.0, 1.0, 5.0, 10.0}) {
      const auto J = jacobian_j(alpha, inst.grad_h, inst.H, k);
      const Eigen::MatrixXd Jx = pi_jacobian(k, EmpiricalMeasure(k.mu().values()), alpha);
      worst_mu = std::max(worst_mu, detail::max_abs(Jx - J.J22));
    }
    SplitMix64 rng(o.seed * 100 + 35 + t);
    const Eigen::VectorXd x = oracle::random_simplex_point(n, rng);
    for (double alpha : {0.5, 2.0, 5.0}) {
      // π is homogeneous of degree 0 in x, so off-simplex points are evaluated after rescaling.
      auto field = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return srrw_stationary(k, EmpiricalMeasure(y / y.sum()), alpha).values() - y;
      };
      const Eigen::MatrixXd fd = oracle::finite_difference_jacobian(field, x, 1e-6);
      worst_fd = std::max(worst_fd, detail::max_abs(pi_jacobian(k, EmpiricalMeasure(x), alpha) - fd));
    }
  }
  return detail::verdict(worst_mu <= 1e-10 && worst_fd <= 1e-5,
                         "J22 error " + detail::fmt(worst_mu) + ", finite-difference error " + detail::fmt(worst_fd));
}

/// 4. Closed-form V_x against the Lyapunov solve of the x block.
inline Outcome lyapunov_consistency(const Options& o) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(o.seed * 100 + 40 + t);
    const Node n = inst.kernel.size();
    const Eigen::MatrixXd U22 = matrix_u(inst.spec, inst.H).U22;
    for (double alpha : {0.0, 1.0, 2.0, 5.0, 10.0})
      for (double a : {0.8, 1.0}) {
        Eigen::MatrixXd A = jacobian_j(alpha, inst.grad_h, inst.H, inst.kernel).J22;
        if (a == 1.0) A += 0.5 * Eigen::MatrixXd::Identity(n, n);
        worst = std::max(worst, (v_x(alpha, a, inst.spec) - lyapunov_solve(A, U22)).norm());
      }
  }
  return detail::verdict(worst <= 1e-8, "Frobenius error " + detail::fmt(worst));
}

/// 5. Loewner chains in α and equality of the α-free case.
inline Outcome ordering_suite(const Options& o) {
  const double grid[] = {0.0, 1.0, 2.0, 5.0, 10.0, 20.0};
  int broken = 0, checked = 0;
  double worst_eq = 0.0, worst_case3 = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(o.seed * 100 + 50 + t);
    std::vector<Eigen::MatrixXd> vx8, vx1, vth;
    for (double alpha : grid) {
      vx8.push_back(v_x(alpha, 0.8, inst.spec));
      vx1.push_back(v_x(alpha, 1.0, inst.spec));
      vth.push_back(v_theta_case1(alpha, inst.grad_h, 0.9, inst.spec, inst.H));
    }
    for (std::size_t i = 0; i + 1 < vth.size(); ++i) {
      for (const auto* chain : {&vx8, &vx1, &vth}) {
        ++checked;
        if (!loewner_lt((*chain)[i + 1], (*chain)[i])) ++broken;
      }
    }
    const Eigen::MatrixXd v3 = v_theta_case3(inst.grad_h, inst.spec, inst.H);
    worst_eq = std::max(worst_eq, detail::max_abs(vth[0] - v3));
    const auto r1 = covariance_report(1.0, 1.0, 0.9, inst.grad_h, inst.spec, inst.H, inst.kernel);
    const auto r10 = covariance_report(10.0, 1.0, 0.9, inst.grad_h, inst.spec, inst.H, inst.kernel);
    worst_case3 = std::max(worst_case3, detail::max_abs(r1.V_theta - r10.V_theta));
  }
  return detail::verdict(broken == 0 && worst_eq <= 1e-12 && worst_case3 == 0.0,
                         std::to_string(checked - broken) + "/" + std::to_string(checked) +
                             " adjacent pairs ordered, case1(0) vs case3 " + detail::fmt(worst_eq) +
                             ", case3 across alpha " + detail::fmt(worst_case3));
}

/// Least-squares slope of log(y) on log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// 6. Inverse-square decay of trace V_θ^(1)(α).
inline Outcome inverse_square_rate(const Options& o) {
  const Problem pb = detail::stand_in_problem(o);
  const auto spec = decompose(pb.kernel);
  auto trace_at = [&](double alpha) {
    return v_theta_case1(alpha, pb.star.grad_h, 0.9, spec, pb.star.H).trace();
  };
  const std::vector<double> tail{10, 20, 40, 80, 160, 320};
  std::vector<std::pair<double, double>> tail_pts;
  for (double a : tail) tail_pts.emplace_back(a, trace_at(a));
  const FitResult tail_fit = fit_inverse_square(tail_pts);
  std::vector<double> shifted;
  bool positive = true;
  for (auto [a, v] : tail_pts) {
    shifted.push_back(v - tail_fit.c3);
    positive = positive && shifted.back() > 0.0;
  }
  const double slope = positive ? loglog_slope(tail, shifted) : 0.0;

  std::vector<std::pair<double, double>> pts;
  for (int a = 0; a <= 20; ++a) pts.emplace_back(a, trace_at(a));
  const FitResult fit = fit_inverse_square(pts);
  const double r2 = r_squared(pts, fit);
  return detail::verdict(positive && slope >= -2.2 && slope <= -1.8 && r2 >= 0.95,
                         "slope " + detail::fmt(slope, 4) + ", R^2 " + detail::fmt(r2, 6));
}

/// Final empirical measures of `replicas` SRRW runs (seeds base + r).
inline std::vector<Eigen::VectorXd> final_measures(const ReversibleKernel& k, const StepSchedule& s, double alpha,
                                                   std::uint64_t n_steps, std::size_t replicas,
                                                   std::uint64_t base_seed, unsigned threads) {
  std::vector<Eigen::VectorXd> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    SplitMix64 rng(base_seed + r);
    const Node start = static_cast<Node>(rng.below(static_cast<std::uint64_t>(k.size())));
    SrrwWalker walker(k, SrrwProcessState{start, EmpiricalMeasure::uniform(k.size()), 0, alpha});
    for (std::uint64_t m = 1; m <= n_steps; ++m) walker.step(s.gamma(m), rng);
    out[r] = walker.state().x.values();
  });
  return out;
}

/// 7. γ_n^{−1/2}(x_n − μ) covariance against V_x(α).
inline Outcome clt_measure(const Options& o) {
  const Graph g = detail::clt_graph(o.seed);
  const ReversibleKernel k = build_mhrw(g, TargetDistribution::uniform(g.node_count()));
  const auto spec = decompose(k);
  const StepSchedule s(1.0, 1.0);
  const std::uint64_t n = 1'000'000;
  const std::size_t R = 200;
  std::string summary;
  bool ok = true;
  double emp_trace[2] = {0, 0};
  int idx = 0;
  for (double alpha : {0.0, 2.0}) {
    const auto xs = final_measures(k, s, alpha, n, R, o.seed * 1'000'003 + 7000, o.threads);
    const double emp = empirical_scaled_covariance(xs, k.mu().values(), s.gamma(n)).trace();
    const double theory = v_x(alpha, 1.0, spec).trace();
    const double rel = std::abs(emp - theory) / theory;
    ok = ok && rel <= 0.20;
    emp_trace[idx++] = emp;
    summary += "alpha=" + detail::fmt(alpha) + ": empirical " + detail::fmt(emp, 4) + " vs " +
              detail::fmt(theory, 4) + " (rel " + detail::fmt(rel, 3) + "); ";
  }
  ok = ok && emp_trace[1] < emp_trace[0];
  return detail::verdict(ok, summary + (emp_trace[1] < emp_trace[0] ? "alpha=2 below alpha=0" : "ordering broken"));
}

/// 8. β_n^{−1/2}(θ_n − θ*) covariance against V_θ^(1)(α) on the quadratic toy.
inline Outcome clt_theta(const Options& o) {
  ProblemSpec ps;
  ps.graph = detail::clt_graph(o.seed);
  ps.objective = ObjectiveKind::quadratic;
  ps.features = 2;
  ps.data_seed = o.seed + 808;
  ps.b_exponent = 0.9;
  const Problem pb = build_problem(ps);
  const auto spec = decompose(pb.kernel);
  const StepSchedule s(0.8, 0.9);
  const std::uint64_t n = 1'000'000;
  std::string summary;
  bool ok = true;
  double emp_trace[2] = {0, 0};
  int idx = 0;
  for (double alpha : {0.0, 5.0}) {
    ReplicaConfig cfg;
    cfg.kernel = &pb.kernel;
    cfg.drift = &pb.drift;
    cfg.schedule = s;
    cfg.alpha = alpha;
    cfg.n_steps = n;
    cfg.record = {n};
    cfg.theta_star = pb.star.theta;
    const auto res = run_replicas(cfg, 200, o.seed * 1'000'003 + 8000, o.threads);
    std::vector<Eigen::VectorXd> thetas;
    for (const auto& z : res.final_z) thetas.push_back(pb.drift.theta_of(z));
    const double emp = empirical_scaled_covariance(thetas, pb.star.theta, s.beta(n)).trace();
    const double theory = v_theta_case1(alpha, pb.star.grad_h, 0.9, spec, pb.star.H).trace();
    const double rel = std::abs(emp - theory) / theory;
    ok = ok && rel <= 0.25;
    emp_trace[idx++] = emp;
    summary += "alpha=" + detail::fmt(alpha) + ": empirical " + detail::fmt(emp, 4) + " vs " +
              detail::fmt(theory, 4) + " (rel " + detail::fmt(rel, 3) + "); ";
  }
  ok = ok && emp_trace[1] < emp_trace[0];
  return detail::verdict(ok, summary + (emp_trace[1] < emp_trace[0] ? "alpha=5 below alpha=0" : "ordering broken"));
}

struct FinalMse {
  double mean;
  double stderr_;
};

/// True when `values` is non-increasing except for at most one adjacent
/// inversion no larger than the standard error of the difference.
inline bool ordered_with_tolerance(const std::vector<FinalMse>& values) {
  int inversions = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double excess = values[i + 1].mean - values[i].mean;
    if (excess <= 0.0) continue;
    const double se = std::hypot(values[i].stderr_, values[i + 1].stderr_);
    if (excess > se) return false;
    ++inversions;
  }
  return inversions <= 1;
}

/// 9. MSE orderings at desk scale on the 62-node stand-in.
inline Outcome mse_orderings(const Options& o) {
  const Problem pb = detail::stand_in_problem(o);
  const std::uint64_t n = 100'000;
  auto final_mse = [&](double alpha, double a, std::uint64_t seed) {
    ReplicaConfig cfg;
    cfg.kernel = &pb.kernel;
    cfg.drift = &pb.drift;
    cfg.schedule = StepSchedule(a, 0.9);
    cfg.alpha = alpha;
    cfg.n_steps = n;
    cfg.record = {n};
    cfg.theta_star = pb.star.theta;
    const auto res = run_replicas(cfg, 100, seed, o.threads);
    return FinalMse{res.mse.mean.back(), res.mse.stderr_.back()};
  };
  const std::uint64_t base = o.seed * 1'000'003 + 9000;
  // Ascending in the expected MSE: α = 10, 5, 1, 0.
  std::vector<FinalMse> by_alpha;
  std::string summary = "case 1 final MSE";
  for (double alpha : {10.0, 5.0, 1.0, 0.0}) {
    by_alpha.push_back(final_mse(alpha, 0.8, base));
    summary += " a" + detail::fmt(alpha) + "=" + detail::fmt(by_alpha.back().mean, 4);
  }
  std::vector<FinalMse> by_case{by_alpha[1], final_mse(5.0, 0.9, base), final_mse(5.0, 1.0, base)};
  summary += "; alpha=5 cases 1/2/3: " + detail::fmt(by_case[0].mean, 4) + " " + detail::fmt(by_case[1].mean, 4) +
            " " + detail::fmt(by_case[2].mean, 4);
  // The helper expects non-increasing order, so compare the cases from (iii) down to (i).
  std::vector<FinalMse> cases_desc(by_case.rbegin(), by_case.rend());
  std::vector<FinalMse> alphas_desc(by_alpha.rbegin(), by_alpha.rend());
  return detail::verdict(ordered_with_tolerance(alphas_desc) && ordered_with_tolerance(cases_desc), summary);
}

/// 10. Step-by-step recursion against the weighted closed form.
inline Outcome weighted_measure_equivalence(const Options& o) {
  SplitMix64 rng(o.seed + 10);
  const Node n = 8;
  double worst = 0.0;
  for (double a : {0.8, 0.9, 1.0}) {
    const StepSchedule s(a, 1.0);
    std::vector<Node> path(1000);
    for (auto& v : path) v = static_cast<Node>(rng.below(n));
    const Eigen::VectorXd x0 = oracle::random_simplex_point(n, rng);
    EmpiricalMeasure x(x0);
    for (std::size_t i = 0; i < path.size(); ++i) x.mix_toward(path[i], s.gamma(i + 1));
    worst = std::max(worst, (x.values() - weighted_measure(path, x0, s)).cwiseAbs().maxCoeff());
  }
  return detail::verdict(worst <= 1e-12, "max-norm gap " + detail::fmt(worst));
}

/// 11. Gradients and drift Jacobians against finite differences; root solver.
inline Outcome gradient_correctness(const Options& o) {
  const Dataset data = detail::load_stand_in_dataset(o);
  const Graph g = detail::load_stand_in_graph(o);
  const auto assignment = assign_to_nodes(data, g);
  const Eigen::VectorXd mu = TargetDistribution::uniform(g.node_count()).values();
  SplitMix64 rng(o.seed + 11);
  double worst_grad = 0.0, worst_drift = 0.0;
  auto rel = [](const auto& got, const auto& ref) { return (got - ref).norm() / std::max(1.0, ref.norm()); };
  for (ObjectiveKind kind : {ObjectiveKind::logistic, ObjectiveKind::ncreg}) {
    const Objective obj = Objective::from_dataset(kind, data, assignment, 1.0);
    for (int t = 0; t < 100; ++t) {
      const Node i = static_cast<Node>(rng.below(static_cast<std::uint64_t>(obj.nodes())));
      const Eigen::VectorXd theta = oracle::normal_matrix(obj.dim(), 1, rng);
      const Eigen::VectorXd fd =
          oracle::finite_difference_gradient([&](const Eigen::VectorXd& th) { return obj.loss(th, i); }, theta);
      worst_grad = std::max(worst_grad, rel(obj.grad(theta, i), fd));
    }
    for (DriftVariant variant : {DriftVariant::sgd, DriftVariant::shb, DriftVariant::momentum}) {
      const DriftField drift = make_drift(obj, variant);
      for (int t = 0; t < 100; ++t) {
        const Node i = static_cast<Node>(rng.below(static_cast<std::uint64_t>(obj.nodes())));
        Eigen::VectorXd z = oracle::normal_matrix(drift.dim(), 1, rng);
        if (variant == DriftVariant::momentum)
          z.head(obj.dim()) = oracle::uniform_vector(obj.dim(), 0.1, 2.0, rng);
        const Eigen::MatrixXd fd =
            oracle::finite_difference_jacobian([&](const Eigen::VectorXd& y) { return drift.evaluate(y, i); }, z);
        worst_drift = std::max(worst_drift, rel(drift.node_jacobian(z, i), fd));
      }
    }
  }
  const Objective logistic = Objective::from_dataset(ObjectiveKind::logistic, data, assignment, 1.0);
  const ThetaStar star = solve_theta_star(make_drift(logistic, DriftVariant::sgd), mu);
  const Objective quad = Objective::quadratic(random_centers(g.node_count(), 3, o.seed + 111));
  const ThetaStar qstar = solve_theta_star(make_drift(quad, DriftVariant::sgd), mu);
  const Eigen::VectorXd mean = quad.data().colwise().mean().transpose();
  const double quad_err = (qstar.theta - mean).cwiseAbs().maxCoeff();
  return detail::verdict(worst_grad <= 1e-5 && worst_drift <= 1e-5 && star.grad_norm <= 1e-10 && quad_err <= 1e-12,
                         "gradient " + detail::fmt(worst_grad) + ", drift Jacobian " + detail::fmt(worst_drift) +
                             ", logistic |grad f(theta*)| " + detail::fmt(star.grad_norm) + ", quad root error " +
                             detail::fmt(quad_err));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// 12. Two identical `run` invocations write identical bytes.
inline Outcome determinism(const Options& o) {
  if (o.cli.empty()) return {Status::skip, "no executable given"};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("tokenwalk-determinism-" + std::to_string(o.seed) + "-" +
                        std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::create_directories(dir);
  const fs::path data(o.data_dir);
  std::string sizes;
  bool ok = true;
  std::string outputs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("run" + std::to_string(run) + ".csv");
    const std::string cmd = "\"" + o.cli + "\" run --graph \"" + (data / "synthetic62.edges").string() +
                            "\" --objective logistic --variant shb --dataset \"" +
                            (data / "ijcnn1_like.libsvm").string() +
                            "\" --features 22 --alpha 5 --case 1 --steps 5000 --replicas 16 --seed " +
                            std::to_string(o.seed) + " --threads " + std::to_string(4) +
                            " --out \"" + out.string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) ok = false;
    outputs[run] = slurp(out);
  }
  fs::remove_all(dir);
  ok = ok && !outputs[0].empty() && outputs[0] == outputs[1];
  return detail::verdict(ok, std::to_string(outputs[0].size()) + " bytes, " +
                                 (outputs[0] == outputs[1] ? "identical" : "different"));
}

inline std::vector<Criterion> all_criteria() {
  return {
      {1, "kernel identities", false, kernel_identities},
      {2, "stationary distribution vs power iteration", false, stationary_oracle},
      {3, "Jacobian cross-checks", false, jacobian_checks},
      {4, "closed-form V_x vs Lyapunov solve", false, lyapunov_consistency},
      {5, "Loewner ordering suite", false, ordering_suite},
      {6, "inverse-square variance decay", false, inverse_square_rate},
      {7, "empirical CLT for x", true, clt_measure},
      {8, "empirical CLT for theta (slow theta)", true, clt_theta},
      {9, "MSE orderings on 62-node graph", true, mse_orderings},
      {10, "weighted-measure equivalence", false, weighted_measure_equivalence},
      {11, "gradient correctness", false, gradient_correctness},
      {12, "determinism of run", false, determinism},
  };
}

/// Runs the selected criteria, printing one line each. Returns the number of failures.
inline int run_all(const Options& o, std::FILE* out, const std::vector<int>& only = {}) {
  int failures = 0;
  for (const auto& c : all_criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    if (o.quick && c.monte_carlo) {
      r = {Status::skip, "skipped in quick mode"};
    } else {
      try {
        r = c.run(o);
      } catch (const std::exception& e) {
        r = {Status::fail, std::string("error: ") + e.what()};
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = r.status == Status::pass ? "PASS" : r.status == Status::fail ? "FAIL" : "SKIP";
    if (r.status == Status::fail) ++failures;
    std::fprintf(out, "%s criterion %d: %s - %s (%.2f s)\n", tag, c.id, c.name.c_str(), r.summary.c_str(), secs);
    std::fflush(out);
  }
  return failures;
}

}  // namespace tokenwalk::verify
