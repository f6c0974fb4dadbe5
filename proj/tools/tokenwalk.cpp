#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tokenwalk/problem.hpp"
#include "tokenwalk/tokenwalk.hpp"
#include "tokenwalk_verify/criteria.hpp"

#ifndef TOKENWALK_DATA_DIR
#define TOKENWALK_DATA_DIR "tests/data"
#endif

namespace fs = std::filesystem;
using namespace tokenwalk;

namespace {

struct ProblemFlags {
  std::string graph;
  std::string objective = "logistic";
  std::string variant = "sgd";
  std::string dataset;
  Eigen::Index features = 22;
  double kappa = 1.0;
  std::uint64_t data_seed = 0;
  double epsilon = 1e-8;
  double lazy = 0.0;
  int case_id = 1;
  std::optional<double> a, b;

  void attach(CLI::App* cmd) {
    cmd->add_option("--graph", graph, "edge-list file")->required();
    cmd->add_option("--objective", objective, "logistic, ncreg or quad")
        ->check(CLI::IsMember({"logistic", "ncreg", "quad"}));
    cmd->add_option("--variant", variant, "sgd, shb or momentum")->check(CLI::IsMember({"sgd", "shb", "momentum"}));
    cmd->add_option("--dataset", dataset, "LIBSVM file (logistic, ncreg)");
    cmd->add_option("--features", features, "feature dimension (quad: parameter dimension)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--kappa", kappa, "regularization weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--data-seed", data_seed, "seed for the quad centres");
    cmd->add_option("--epsilon", epsilon, "momentum stabilizer")->check(CLI::PositiveNumber);
    cmd->add_option("--lazy", lazy, "mix the base chain with the identity by this weight");
    cmd->add_option("--case", case_id, "step-size regime: 1 (a=0.8), 2 (a=0.9), 3 (a=1); b=0.9")
        ->check(CLI::Range(1, 3));
    cmd->add_option("--a", a, "gamma exponent, overrides --case");
    cmd->add_option("--b", b, "beta exponent, overrides --case");
  }

  StepSchedule schedule() const {
    const StepSchedule preset = schedule_for_case(static_cast<TimescaleCase>(case_id));
    return {a.value_or(preset.a()), b.value_or(preset.b())};
  }

  ProblemSpec spec(double b_exponent) const {
    ProblemSpec ps;
    ps.graph = load_edge_list_file(graph);
    ps.objective = parse_objective_kind(objective);
    ps.variant = parse_drift_variant(variant);
    if (ps.objective != ObjectiveKind::quadratic) {
      if (dataset.empty()) throw ValidationError("--dataset is required for the " + objective + " objective");
      ps.dataset = load_libsvm_file(dataset, features);
    }
    ps.features = features;
    ps.kappa = kappa;
    ps.data_seed = data_seed;
    ps.epsilon = epsilon;
    ps.lazy = lazy;
    ps.b_exponent = b_exponent;
    return ps;
  }

  void echo(std::map<std::string, std::string>& out) const {
    out["graph"] = graph;
    out["objective"] = objective;
    out["variant"] = variant;
    out["dataset"] = dataset;
    out["features"] = std::to_string(features);
    out["kappa"] = format_double(kappa);
    out["data_seed"] = std::to_string(data_seed);
    out["epsilon"] = format_double(epsilon);
    out["lazy"] = format_double(lazy);
  }
};

std::ofstream open_output(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  return out;
}

std::vector<std::string> echo_lines(const std::map<std::string, std::string>& kv) {
  std::vector<std::string> lines;
  std::string joined;
  for (const auto& [k, v] : kv) {
    lines.push_back(k + "=" + v);
    joined += k + "=" + v + "\n";
  }
  std::ostringstream h;
  h << std::hex << fnv1a(joined);
  lines.push_back("config_hash=" + h.str());
  return lines;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    const auto t = std::string(tokenwalk::detail::trim(cell));
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ValidationError("invalid number '" + t + "' in list");
    }
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

int graph_info(const std::string& path) {
  const Graph g = load_edge_list_file(path);
  std::size_t dmin = g.node_count() ? g.degree(0) : 0, dmax = dmin;
  for (Node i = 0; i < g.node_count(); ++i) {
    dmin = std::min(dmin, g.degree(i));
    dmax = std::max(dmax, g.degree(i));
  }
  std::cout << "nodes " << g.node_count() << "\nedges " << g.edge_count() << "\nmin_degree " << dmin
            << "\nmax_degree " << dmax << "\nconnected " << (g.connected() ? "true" : "false") << '\n';
  if (!g.connected()) {
    const Graph lcc = largest_connected_component(g);
    std::cout << "largest_component_nodes " << lcc.node_count() << "\nlargest_component_edges " << lcc.edge_count()
              << '\n';
  }
  return 0;
}

struct RunFlags {
  ProblemFlags problem;
  double alpha = 0.0;
  std::uint64_t steps = 100'000;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  std::size_t record = 200;
  std::string out;
  std::string raw;
  double radius = 0.0;
  unsigned threads = 0;
};

int run_command(const RunFlags& f) {
  const StepSchedule s = f.problem.schedule();
  const Problem pb = build_problem(f.problem.spec(s.b()));
  std::map<std::string, std::string> kv;
  f.problem.echo(kv);
  kv["alpha"] = format_double(f.alpha);
  kv["a"] = format_double(s.a());
  kv["b"] = format_double(s.b());
  kv["steps"] = std::to_string(f.steps);
  kv["replicas"] = std::to_string(f.replicas);
  kv["seed"] = std::to_string(f.seed);
  kv["record"] = std::to_string(f.record);
  kv["radius"] = format_double(f.radius);
  kv["nodes"] = std::to_string(pb.graph.node_count());
  kv["theta_star_grad_norm"] = format_double(pb.star.grad_norm);
  const auto comments = echo_lines(kv);

  ReplicaConfig cfg;
  cfg.kernel = &pb.kernel;
  cfg.drift = &pb.drift;
  cfg.schedule = s;
  cfg.alpha = f.alpha;
  cfg.n_steps = f.steps;
  cfg.record = log_grid(f.steps, f.record);
  cfg.theta_star = pb.star.theta;
  cfg.options.projection_radius = f.radius;
  cfg.options.config_hash = fnv1a(comments.back());
  const auto res = run_replicas(cfg, f.replicas, f.seed, f.threads ? f.threads : default_thread_count());

  auto out = open_output(f.out);
  write_mse_csv(res.mse, out, comments);
  if (!f.raw.empty()) {
    auto raw = open_output(f.raw);
    for (const auto& c : comments) raw << "# " << c << '\n';
    raw << "replica,seed,n,sq_error\n";
    for (std::size_t r = 0; r < res.sq_errors.size(); ++r)
      for (std::size_t c = 0; c < cfg.record.size(); ++c)
        raw << r << ',' << res.seeds[r] << ',' << cfg.record[c] << ',' << format_double(res.sq_errors[r][c]) << '\n';
  }
  if (res.failures)
    std::cerr << res.failures << " of " << f.replicas << " replicas diverged and were dropped\n";
  std::cerr << "final MSE " << res.mse.mean.back() << " (stderr " << res.mse.stderr_.back() << ") over "
            << res.mse.replicas << " replicas\n";
  return 0;
}

struct TheoryFlags {
  ProblemFlags problem;
  std::string alphas = "0,1,2,5,10,20";
  std::string out;
  std::string dump_dir;
};

int theory_command(const TheoryFlags& f) {
  const StepSchedule s = f.problem.schedule();
  const Problem pb = build_problem(f.problem.spec(s.b()));
  const auto spec = decompose(pb.kernel);
  const auto alphas = parse_list(f.alphas);
  for (double a : alphas)
    if (!(a >= 0.0)) throw ValidationError("alphas must be >= 0");

  std::map<std::string, std::string> kv;
  f.problem.echo(kv);
  kv["alphas"] = f.alphas;
  kv["a"] = format_double(s.a());
  kv["b"] = format_double(s.b());
  kv["nodes"] = std::to_string(pb.graph.node_count());

  const auto baseline = covariance_report(0.0, s.a(), s.b(), pb.star.grad_h, spec, pb.star.H, pb.kernel);
  auto out = open_output(f.out);
  for (const auto& c : echo_lines(kv)) out << "# " << c << '\n';
  out << "alpha,case,trace_v_x,trace_v_theta,lambda_min_gap\n";
  for (double alpha : alphas) {
    const auto r = covariance_report(alpha, s.a(), s.b(), pb.star.grad_h, spec, pb.star.H, pb.kernel);
    const double gap = min_eigenvalue(baseline.V_theta - r.V_theta);
    out << format_double(alpha) << ',' << static_cast<int>(r.case_id) << ',' << format_double(r.V_x.trace()) << ','
        << format_double(r.V_theta.trace()) << ',' << format_double(gap) << '\n';
    if (!f.dump_dir.empty()) {
      const std::string tag = format_double(alpha);
      auto vt = open_output((fs::path(f.dump_dir) / ("v_theta_alpha" + tag + ".csv")).string());
      write_matrix_csv(r.V_theta, vt);
      auto vx = open_output((fs::path(f.dump_dir) / ("v_x_alpha" + tag + ".csv")).string());
      write_matrix_csv(r.V_x, vx);
    }
  }
  return 0;
}

int fit_command(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw ValidationError("cannot open '" + in_path + "'");
  const CsvTable t = read_csv(in);
  const auto ca = t.column("alpha");
  std::optional<std::size_t> cv;
  for (const char* name : {"value", "trace_v_theta", "mse_mean"})
    if (t.has_column(name)) {
      cv = t.column(name);
      break;
    }
  if (!cv) throw ValidationError("input needs a value, trace_v_theta or mse_mean column");
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : t.rows) pts.emplace_back(row[ca], row[*cv]);
  const FitResult fit = fit_inverse_square(pts);
  auto out = open_output(out_path);
  write_fit_csv(fit, out);
  std::cerr << "R^2 " << r_squared(pts, fit) << '\n';
  return 0;
}

std::string self_path(const char* argv0) {
  std::error_code ec;
  const auto p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::absolute(argv0).string() : p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-repellent random walk stochastic approximation: simulation and asymptotic covariance"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file; [run] and [theory] sections hold subcommand flags");

  std::string info_path;
  auto* info = app.add_subcommand("graph-info", "print node/edge counts, degree range and connectivity");
  info->add_option("file", info_path, "edge-list file")->required();
  auto* graph = app.add_subcommand("graph", "graph utilities");
  graph->require_subcommand(1);
  std::string info_alias_path;
  auto* graph_info_cmd = graph->add_subcommand("info", "same as graph-info");
  graph_info_cmd->add_option("file", info_alias_path, "edge-list file")->required();

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Monte-Carlo MSE of the SA iterate over replicas");
  rf.problem.attach(run);
  run->add_option("--alpha", rf.alpha, "self-repellence strength")->check(CLI::NonNegativeNumber);
  run->add_option("--steps", rf.steps, "steps per replica")->check(CLI::PositiveNumber);
  run->add_option("--replicas", rf.replicas, "number of replicas")->check(CLI::Range(2, 1'000'000));
  run->add_option("--seed", rf.seed, "base seed; replica r uses seed + r");
  run->add_option("--record", rf.record, "recorded points per decade (at most 1000 in total)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", rf.out, "MSE CSV")->required();
  run->add_option("--raw", rf.raw, "per-replica squared errors CSV");
  run->add_option("--radius", rf.radius, "project the iterate onto a ball of this radius (0: off)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--threads", rf.threads, "worker threads (default: TOKENWALK_THREADS or all cores)");
  run->fallthrough();

  TheoryFlags tf;
  auto* theory = app.add_subcommand("theory", "asymptotic covariance traces over an alpha grid");
  tf.problem.attach(theory);
  theory->fallthrough();
  theory->add_option("--alphas", tf.alphas, "comma-separated alphas");
  theory->add_option("--out", tf.out, "theory CSV")->required();
  theory->add_option("--dump-dir", tf.dump_dir, "write V_theta and V_x per alpha as row-major CSV");

  verify::Options vo;
  vo.data_dir = TOKENWALK_DATA_DIR;
  bool quick = false;
  std::string only;
  unsigned verify_threads = 0;
  auto* ver = app.add_subcommand("verify", "run the invariant suite, one PASS/FAIL line per property");
  ver->add_option("--seed", vo.seed, "seed for random instances");
  ver->add_flag("--quick", quick, "skip the Monte-Carlo properties");
  ver->add_option("--only", only, "comma-separated property numbers");
  ver->add_option("--data-dir", vo.data_dir, "directory with the stand-in graph and dataset");
  ver->add_option("--threads", verify_threads, "worker threads");

  std::string fit_in, fit_out;
  auto* fit = app.add_subcommand("fit", "fit c1/(alpha+c2)^2 + c3 to alpha,value data");
  fit->add_option("--in", fit_in, "CSV with an alpha column and a value, trace_v_theta or mse_mean column")
      ->required();
  fit->add_option("--out", fit_out, "fit CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*info) return graph_info(info_path);
    if (*graph_info_cmd) return graph_info(info_alias_path);
    if (*run) return run_command(rf);
    if (*theory) return theory_command(tf);
    if (*fit) return fit_command(fit_in, fit_out);
    if (*ver) {
      vo.quick = quick;
      if (verify_threads) vo.threads = verify_threads;
      vo.cli = self_path(argv[0]);
      std::vector<int> ids;
      if (!only.empty())
        for (double v : parse_list(only)) ids.push_back(static_cast<int>(v));
      return verify::run_all(vo, stdout, ids) == 0 ? 0 : 1;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
