#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tokenwalk/engine.hpp"
#include "tokenwalk/error.hpp"

namespace tokenwalk {

/// Per-step mean squared error of the θ block across replicas.
struct MseSeries {
  std::vector<std::uint64_t> indices;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::size_t replicas = 0;
};

/// Everything one replica needs; the kernel and drift are shared read-only.
struct ReplicaConfig {
  const ReversibleKernel* kernel = nullptr;
  const DriftField* drift = nullptr;
  StepSchedule schedule{1.0, 1.0};
  double alpha = 0.0;
  std::uint64_t n_steps = 0;
  std::vector<std::uint64_t> record;  ///< recording grid shared by all replicas
  Eigen::VectorXd theta_star;
  RunOptions options;
};

struct ReplicaResults {
  MseSeries mse;
  std::vector<std::uint64_t> seeds;            ///< seed of each successful replica
  std::vector<std::vector<double>> sq_errors;  ///< [replica][record index]
  std::vector<Eigen::VectorXd> final_z;
  std::vector<Eigen::VectorXd> final_x;
  std::size_t failures = 0;
};

/// Thread count: TOKENWALK_THREADS if set and positive, else the number of
/// logical cores.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("TOKENWALK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `jobs` tasks indexed 0..jobs-1 on up to `threads` workers.
inline void parallel_for(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs, 1))));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs; ++j) body(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < jobs; j = next++) {
        try {
          body(j);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Mean and standard error per column of `rows` (rows = replicas).
inline MseSeries summarize_mse(const std::vector<std::uint64_t>& indices,
                               const std::vector<std::vector<double>>& rows) {
  MseSeries s;
  s.indices = indices;
  s.replicas = rows.size();
  if (s.replicas < 2) throw ValidationError("MSE needs at least two replicas");
  const double R = static_cast<double>(s.replicas);
  s.mean.resize(indices.size());
  s.stderr_.resize(indices.size());
  for (std::size_t c = 0; c < indices.size(); ++c) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[c];
    mean /= R;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[c] - mean) * (r[c] - mean);
    s.mean[c] = mean;
    s.stderr_[c] = std::sqrt(ss / (R - 1.0) / R);
  }
  return s;
}

/// R independent runs with seeds base_seed + r. Diverged replicas are
/// dropped; more than 5% failures is an error.
inline ReplicaResults run_replicas(const ReplicaConfig& cfg, std::size_t replicas, std::uint64_t base_seed,
                                   unsigned threads = default_thread_count()) {
  if (!cfg.kernel || !cfg.drift) throw ValidationError("replica config is missing kernel or drift");
  if (replicas < 2) throw ValidationError("need at least two replicas");
  if (cfg.theta_star.size() != cfg.drift->theta_dim()) throw ValidationError("theta* has wrong dimension");

  struct Slot {
    bool ok = false;
    std::string error;
    std::vector<double> sq;
    Eigen::VectorXd z, x;
  };
  std::vector<Slot> slots(replicas);
  const RecordSpec spec{cfg.record, false};
  parallel_for(replicas, threads, [&](std::size_t r) {
    auto& slot = slots[r];
    try {
      const auto rec = run_sa_srrw(*cfg.kernel, *cfg.drift, cfg.schedule, cfg.alpha, cfg.n_steps,
                                   base_seed + r, spec, cfg.options);
      slot.sq.reserve(rec.z.size());
      for (const auto& z : rec.z)
        slot.sq.push_back((cfg.drift->theta_of(z) - cfg.theta_star).squaredNorm());
      slot.z = rec.final_z;
      slot.x = rec.final_x;
      slot.ok = true;
    } catch (const NumericalError& e) {
      slot.error = e.what();
    }
  });

  ReplicaResults out;
  std::string first_error;
  for (std::size_t r = 0; r < replicas; ++r) {
    auto& slot = slots[r];
    if (!slot.ok) {
      ++out.failures;
      if (first_error.empty()) first_error = slot.error;
      continue;
    }
    out.seeds.push_back(base_seed + r);
    out.sq_errors.push_back(std::move(slot.sq));
    out.final_z.push_back(std::move(slot.z));
    out.final_x.push_back(std::move(slot.x));
  }
  if (static_cast<double>(out.failures) > 0.05 * static_cast<double>(replicas))
    throw NumericalError(std::to_string(out.failures) + " of " + std::to_string(replicas) +
                         " replicas diverged (first: " + first_error + ")");
  out.mse = summarize_mse(cfg.record, out.sq_errors);
  return out;
}

/// Covariance of scale^{−1/2}(s − center): Σ (s − c)(s − c)ᵀ / ((R − 1)·scale).
inline Eigen::MatrixXd empirical_scaled_covariance(const std::vector<Eigen::VectorXd>& samples,
                                                   const Eigen::VectorXd& center, double scale) {
  if (samples.size() < 2) throw ValidationError("covariance needs at least two samples");
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  const auto d = center.size();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : samples) {
    if (s.size() != d) throw ValidationError("sample dimension does not match center");
    const Eigen::VectorXd e = s - center;
    C.selfadjointView<Eigen::Lower>().rankUpdate(e);
  }
  C = C.selfadjointView<Eigen::Lower>();
  return C / (static_cast<double>(samples.size() - 1) * scale);
}

// ---------------------------------------------------------------------------
// Curve fitting

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Derivative-free minimization. Stops when every vertex lies within `tol`
/// (relative to the best vertex's scale) of the best vertex and the function
/// spread is below `tol`, or after max_iter iterations.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                                    std::size_t max_iter = 10'000, double tol = 1e-12) {
  const auto n = start.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += step[i];
  auto eval = [&](const Eigen::VectorXd& p) {
    const double v = f(p);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);
  std::vector<std::size_t> order(pts.size());

  NelderMeadResult res;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const auto best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double spread = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i)
      spread = std::max(spread, (pts[order[i]] - pts[best]).cwiseAbs().maxCoeff());
    const double scale = std::max(1.0, pts[best].cwiseAbs().maxCoeff());
    if (spread <= tol * scale && std::abs(vals[worst] - vals[best]) <= tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 1; i < order.size(); ++i) {
      auto& p = pts[order[i]];
      p = pts[best] + 0.5 * (p - pts[best]);
      vals[order[i]] = eval(p);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

/// Least-squares fit of g(α) = c1/(α + c2)² + c3.
struct FitResult {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double rss = 0.0;
  bool converged = false;

  double operator()(double alpha) const { return c1 / ((alpha + c2) * (alpha + c2)) + c3; }
};

inline double inverse_square_rss(const std::vector<std::pair<double, double>>& pts, double c1, double c2,
                                 double c3) {
  double rss = 0.0;
  for (auto [a, v] : pts) {
    if (!(a + c2 > 0.0)) return std::numeric_limits<double>::infinity();
    const double r = c1 / ((a + c2) * (a + c2)) + c3 - v;
    rss += r * r;
  }
  return rss;
}

/// Coefficient of determination 1 − RSS/TSS of a fit.
inline double r_squared(const std::vector<std::pair<double, double>>& pts, const FitResult& fit) {
  double mean = 0.0;
  for (auto [a, v] : pts) mean += v;
  mean /= static_cast<double>(pts.size());
  double tss = 0.0;
  for (auto [a, v] : pts) tss += (v - mean) * (v - mean);
  if (tss == 0.0) return fit.rss == 0.0 ? 1.0 : 0.0;
  return 1.0 - fit.rss / tss;
}

/// Multi-start Nelder–Mead over (c1, c2, c3) with c2 kept above −min α.
inline FitResult fit_inverse_square(std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 4) throw ValidationError("curve fit needs at least four points");
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].first == pts[i - 1].first) throw ValidationError("curve fit needs distinct alphas");
  for (auto [a, v] : pts)
    if (a < 0.0 || !std::isfinite(v)) throw ValidationError("curve fit needs finite values at alphas >= 0");

  double vmin = pts.front().second, vmax = vmin;
  for (auto [a, v] : pts) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double span = std::max(vmax - vmin, 1e-12 * std::max(1.0, std::abs(vmax)));
  const double a0 = pts.front().first;
  const double alpha_span = std::max(1.0, pts.back().first - a0);

  auto objective = [&](const Eigen::VectorXd& p) { return inverse_square_rss(pts, p[0], p[1], p[2]); };

  FitResult best;
  best.rss = std::numeric_limits<double>::infinity();
  const std::array<double, 4> c2_starts{0.1, 1.0, 0.2 * alpha_span, alpha_span};
  const std::array<double, 2> c3_starts{vmin, vmin - 0.5 * span};
  for (double c2f : c2_starts)
    for (double c3 : c3_starts) {
      const double c2 = c2f - a0;
      const double c1 = (pts.front().second - c3) * (a0 + c2) * (a0 + c2);
      Eigen::VectorXd x(3);
      x << c1, c2, c3;
      Eigen::VectorXd step(3);
      step << 0.1 * std::max(std::abs(c1), 1e-3 * span), 0.1 * std::max(1.0, std::abs(c2)),
          0.1 * span;
      auto r = nelder_mead(objective, x, step, 10'000, 1e-12);
      // One restart from the optimum re-inflates a collapsed simplex.
      step = (0.05 * r.x.cwiseAbs()).cwiseMax(1e-8);
      auto polished = nelder_mead(objective, r.x, step, 10'000, 1e-12);
      if (polished.value <= r.value) r = std::move(polished);
      if (r.value < best.rss) {
        best = {r.x[0], r.x[1], r.x[2], r.value, r.converged};
      }
    }
  return best;
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

/// Splits one CSV line on commas (no quoting).
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(std::string(detail::trim(cell)));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Header-keyed numeric table; lines starting with '#' are comments.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ValidationError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
  bool has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto cells = split_csv(std::string(body));
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size()) throw ParseError(lineno, "wrong number of columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw ParseError(lineno, "invalid number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ValidationError("CSV has no header");
  return t;
}

/// `n,mse_mean,mse_stderr,replicas`, preceded by `# ` comment lines.
inline void write_mse_csv(const MseSeries& s, std::ostream& out, const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "n,mse_mean,mse_stderr,replicas\n";
  for (std::size_t i = 0; i < s.indices.size(); ++i)
    out << s.indices[i] << ',' << format_double(s.mean[i]) << ',' << format_double(s.stderr_[i]) << ','
        << s.replicas << '\n';
}

inline MseSeries read_mse_csv(std::istream& in) {
  const auto t = read_csv(in);
  const auto cn = t.column("n"), cm = t.column("mse_mean"), cs = t.column("mse_stderr"),
             cr = t.column("replicas");
  MseSeries s;
  for (const auto& row : t.rows) {
    s.indices.push_back(static_cast<std::uint64_t>(row[cn]));
    s.mean.push_back(row[cm]);
    s.stderr_.push_back(row[cs]);
    s.replicas = static_cast<std::size_t>(row[cr]);
  }
  return s;
}

/// `c1,c2,c3,rss,converged`.
inline void write_fit_csv(const FitResult& f, std::ostream& out) {
  out << "c1,c2,c3,rss,converged\n"
      << format_double(f.c1) << ',' << format_double(f.c2) << ',' << format_double(f.c3) << ','
      << format_double(f.rss) << ',' << (f.converged ? 1 : 0) << '\n';
}

/// Row-major matrix dump, one row per line.
inline void write_matrix_csv(const Eigen::MatrixXd& M, std::ostream& out) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << format_double(M(i, j));
    out << '\n';
  }
}

/// FNV-1a, used to tag outputs with their configuration.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tokenwalk
