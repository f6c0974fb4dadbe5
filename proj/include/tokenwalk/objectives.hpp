#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tokenwalk/covariance.hpp"
#include "tokenwalk/error.hpp"
#include "tokenwalk/graph.hpp"
#include "tokenwalk/lyapunov.hpp"

namespace tokenwalk {

/// Labelled samples: row r of `features` is s_r, `labels[r]` ∈ {0, 1}.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  Eigen::Index feature_dim() const noexcept { return features.cols(); }
};

/// Parses LIBSVM text ("label idx:val …", 1-based indices). Labels −1/+1 and
/// 0/1 map to 0/1; absent features are zero.
inline Dataset parse_libsvm(std::istream& in, Eigen::Index feature_dim) {
  if (feature_dim <= 0) throw ValidationError("feature dimension must be positive");
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  std::vector<double> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string tok;
    fields >> tok;
    double label = 0.0;
    try {
      std::size_t used = 0;
      label = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError(lineno, "invalid label '" + tok + "'");
    }
    if (label == -1.0 || label == 0.0)
      labels.push_back(0.0);
    else if (label == 1.0)
      labels.push_back(1.0);
    else
      throw ParseError(lineno, "label must be one of -1, 0, +1, got '" + tok + "'");

    auto& row = rows.emplace_back();
    while (fields >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(lineno, "expected idx:value, got '" + tok + "'");
      long long idx = 0;
      double val = 0.0;
      try {
        std::size_t used = 0;
        idx = std::stoll(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(tok);
        const std::string v = tok.substr(colon + 1);
        val = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(lineno, "malformed feature '" + tok + "'");
      }
      if (idx < 1) throw ParseError(lineno, "feature index must be >= 1");
      if (idx > feature_dim)
        throw ParseError(lineno, "feature index " + std::to_string(idx) + " exceeds dimension " +
                                     std::to_string(feature_dim));
      if (!std::isfinite(val)) throw ParseError(lineno, "non-finite feature value");
      row.emplace_back(static_cast<Eigen::Index>(idx - 1), val);
    }
  }
  Dataset d;
  d.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), feature_dim);
  d.labels = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (auto [c, v] : rows[r]) d.features(static_cast<Eigen::Index>(r), c) = v;
  return d;
}

inline Dataset parse_libsvm(std::string_view text, Eigen::Index feature_dim) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, feature_dim);
}

inline Dataset load_libsvm_file(const std::string& path, Eigen::Index feature_dim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return parse_libsvm(in, feature_dim);
}

/// Node i holds sample i (file order).
inline std::vector<std::size_t> assign_to_nodes(const Dataset& data, const Graph& g) {
  const auto n = static_cast<std::size_t>(g.node_count());
  if (data.size() < n)
    throw ValidationError("dataset has " + std::to_string(data.size()) + " samples but graph has " +
                          std::to_string(n) + " nodes");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

/// Logistic function, evaluated without overflow.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + e^t) without overflow.
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

enum class ObjectiveKind { logistic, ncreg, quadratic };

/// Per-node loss F(θ, i) with gradient and Hessian.
///
///  - logistic:  log(1 + e^{θᵀs_i}) − y_i θᵀs_i + (κ/2)‖θ‖²
///  - ncreg:     (s_iᵀθ − y_i)² + κ Σ_j θ_j²/(θ_j² + 1)
///  - quadratic: ½‖θ − c_i‖²
class Objective {
 public:
  static Objective logistic(Eigen::MatrixXd features, Eigen::VectorXd labels, double kappa) {
    return Objective(ObjectiveKind::logistic, std::move(features), std::move(labels), kappa);
  }
  static Objective ncreg(Eigen::MatrixXd features, Eigen::VectorXd labels, double kappa) {
    return Objective(ObjectiveKind::ncreg, std::move(features), std::move(labels), kappa);
  }
  /// Row i of `centers` is c_i.
  static Objective quadratic(Eigen::MatrixXd centers) {
    const auto n = centers.rows();
    return Objective(ObjectiveKind::quadratic, std::move(centers), Eigen::VectorXd::Zero(n), 0.0);
  }

  /// Logistic or ncreg over the samples assigned to each node.
  static Objective from_dataset(ObjectiveKind kind, const Dataset& data,
                                const std::vector<std::size_t>& assignment, double kappa) {
    Eigen::MatrixXd S(static_cast<Eigen::Index>(assignment.size()), data.feature_dim());
    Eigen::VectorXd y(static_cast<Eigen::Index>(assignment.size()));
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      S.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(assignment[i]));
      y[static_cast<Eigen::Index>(i)] = data.labels[static_cast<Eigen::Index>(assignment[i])];
    }
    switch (kind) {
      case ObjectiveKind::logistic: return logistic(std::move(S), std::move(y), kappa);
      case ObjectiveKind::ncreg: return ncreg(std::move(S), std::move(y), kappa);
      case ObjectiveKind::quadratic: break;
    }
    throw ValidationError("quadratic objective is not built from a dataset");
  }

  ObjectiveKind kind() const noexcept { return kind_; }
  double kappa() const noexcept { return kappa_; }
  Eigen::Index dim() const noexcept { return data_.cols(); }
  Node nodes() const noexcept { return data_.rows(); }
  const Eigen::MatrixXd& data() const noexcept { return data_; }
  const Eigen::VectorXd& labels() const noexcept { return labels_; }

  double loss(const Eigen::Ref<const Eigen::VectorXd>& theta, Node i) const {
    const auto s = data_.row(i).transpose();
    switch (kind_) {
      case ObjectiveKind::logistic: {
        const double t = s.dot(theta);
        return softplus(t) - labels_[i] * t + 0.5 * kappa_ * theta.squaredNorm();
      }
      case ObjectiveKind::ncreg: {
        const double r = s.dot(theta) - labels_[i];
        const Eigen::ArrayXd t2 = theta.array().square();
        return r * r + kappa_ * (t2 / (t2 + 1.0)).sum();
      }
      case ObjectiveKind::quadratic: return 0.5 * (theta - s).squaredNorm();
    }
    return 0.0;
  }

  /// ∇_θ F(θ, i) written into `out` (size D).
  void grad(const Eigen::Ref<const Eigen::VectorXd>& theta, Node i, Eigen::Ref<Eigen::VectorXd> out) const {
    const auto s = data_.row(i).transpose();
    switch (kind_) {
      case ObjectiveKind::logistic:
        out.noalias() = (sigmoid(s.dot(theta)) - labels_[i]) * s;
        out += kappa_ * theta;
        return;
      case ObjectiveKind::ncreg: {
        out.noalias() = (2.0 * (s.dot(theta) - labels_[i])) * s;
        out.array() += 2.0 * kappa_ * theta.array() / (theta.array().square() + 1.0).square();
        return;
      }
      case ObjectiveKind::quadratic: out = theta - s; return;
    }
  }

  Eigen::VectorXd grad(const Eigen::Ref<const Eigen::VectorXd>& theta, Node i) const {
    Eigen::VectorXd g(dim());
    grad(theta, i, g);
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::Ref<const Eigen::VectorXd>& theta, Node i) const {
    const auto s = data_.row(i).transpose();
    const auto D = dim();
    switch (kind_) {
      case ObjectiveKind::logistic: {
        const double p = sigmoid(s.dot(theta));
        Eigen::MatrixXd Hs = (p * (1.0 - p)) * (s * s.transpose());
        Hs.diagonal().array() += kappa_;
        return Hs;
      }
      case ObjectiveKind::ncreg: {
        Eigen::MatrixXd Hs = 2.0 * (s * s.transpose());
        const Eigen::ArrayXd t2 = theta.array().square();
        Hs.diagonal().array() += 2.0 * kappa_ * (1.0 - 3.0 * t2) / (t2 + 1.0).cube();
        return Hs;
      }
      case ObjectiveKind::quadratic: return Eigen::MatrixXd::Identity(D, D);
    }
    return {};
  }

  double mean_loss(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::VectorXd& mu) const {
    double f = 0.0;
    for (Node i = 0; i < nodes(); ++i) f += mu[i] * loss(theta, i);
    return f;
  }

  Eigen::VectorXd mean_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::VectorXd& mu) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    Eigen::VectorXd gi(dim());
    for (Node i = 0; i < nodes(); ++i) {
      grad(theta, i, gi);
      g += mu[i] * gi;
    }
    return g;
  }

  Eigen::MatrixXd mean_hessian(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::VectorXd& mu) const {
    Eigen::MatrixXd Hs = Eigen::MatrixXd::Zero(dim(), dim());
    for (Node i = 0; i < nodes(); ++i) Hs += mu[i] * hessian(theta, i);
    return Hs;
  }

 private:
  Objective(ObjectiveKind kind, Eigen::MatrixXd data, Eigen::VectorXd labels, double kappa)
      : kind_(kind), data_(std::move(data)), labels_(std::move(labels)), kappa_(kappa) {
    if (data_.rows() == 0 || data_.cols() == 0) throw ValidationError("objective has no data");
    if (labels_.size() != data_.rows()) throw ValidationError("label count does not match samples");
    if (!data_.allFinite()) throw ValidationError("objective data must be finite");
  }

  ObjectiveKind kind_;
  Eigen::MatrixXd data_;
  Eigen::VectorXd labels_;
  double kappa_;
};

enum class DriftVariant { sgd, shb, momentum };

/// Stochastic drift H(z, i) of an SGD-type recursion z ← z + βH(z, X).
///
///  - sgd:      z = θ,         H = −∇F(θ, i)
///  - shb:      z = (θ, m),    H = (−m, ∇F(θ, i) − m)
///  - momentum: z = (v, m, θ), H = (∇F² − v, ∇F − m, −m/√(v + ε)), elementwise
class DriftField {
 public:
  DriftField(Objective objective, DriftVariant variant, double epsilon = 1e-8)
      : objective_(std::move(objective)), variant_(variant), epsilon_(epsilon) {
    if (variant_ == DriftVariant::momentum && !(epsilon_ > 0.0))
      throw ValidationError("momentum epsilon must be positive");
  }

  const Objective& objective() const noexcept { return objective_; }
  DriftVariant variant() const noexcept { return variant_; }
  double epsilon() const noexcept { return epsilon_; }
  Eigen::Index theta_dim() const noexcept { return objective_.dim(); }

  Eigen::Index dim() const noexcept {
    switch (variant_) {
      case DriftVariant::sgd: return theta_dim();
      case DriftVariant::shb: return 2 * theta_dim();
      case DriftVariant::momentum: return 3 * theta_dim();
    }
    return 0;
  }

  /// Offset of the θ block inside z.
  Eigen::Index theta_offset() const noexcept {
    return variant_ == DriftVariant::momentum ? 2 * theta_dim() : 0;
  }

  Eigen::VectorXd theta_of(const Eigen::VectorXd& z) const { return z.segment(theta_offset(), theta_dim()); }

  /// H(z, i) into `out`; `z` and `out` must not alias.
  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& z, Node i, Eigen::Ref<Eigen::VectorXd> out) const {
    const auto D = theta_dim();
    switch (variant_) {
      case DriftVariant::sgd:
        objective_.grad(z, i, out);
        out = -out;
        return;
      case DriftVariant::shb: {
        const auto m = z.segment(D, D);
        objective_.grad(z.head(D), i, out.tail(D));
        out.tail(D) -= m;
        out.head(D) = -m;
        return;
      }
      case DriftVariant::momentum: {
        const auto v = z.head(D);
        const auto m = z.segment(D, D);
        auto g = out.segment(D, D);
        objective_.grad(z.tail(D), i, g);
        out.head(D) = g.array().square().matrix() - v;
        out.tail(D) = -(m.array() / (v.array() + epsilon_).sqrt()).matrix();
        g -= m;
        return;
      }
    }
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& z, Node i) const {
    Eigen::VectorXd out(dim());
    evaluate(z, i, out);
    return out;
  }

  /// h(z) = Σ_i μ_i H(z, i).
  Eigen::VectorXd mean_field(const Eigen::VectorXd& z, const Eigen::VectorXd& mu) const {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(dim());
    Eigen::VectorXd hi(dim());
    for (Node i = 0; i < objective_.nodes(); ++i) {
      evaluate(z, i, hi);
      h += mu[i] * hi;
    }
    return h;
  }

  /// ∂H(z, i)/∂z.
  Eigen::MatrixXd node_jacobian(const Eigen::VectorXd& z, Node i) const {
    const auto D = theta_dim();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(D, D);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim(), dim());
    switch (variant_) {
      case DriftVariant::sgd: J = -objective_.hessian(z, i); break;
      case DriftVariant::shb:
        J.block(0, D, D, D) = -I;
        J.block(D, 0, D, D) = objective_.hessian(z.head(D), i);
        J.block(D, D, D, D) = -I;
        break;
      case DriftVariant::momentum: {
        const Eigen::VectorXd theta = z.tail(D);
        const Eigen::ArrayXd v_eps = z.head(D).array() + epsilon_;
        const Eigen::ArrayXd m = z.segment(D, D).array();
        const Eigen::VectorXd g = objective_.grad(theta, i);
        const Eigen::MatrixXd Hs = objective_.hessian(theta, i);
        J.block(0, 0, D, D) = -I;
        J.block(0, 2 * D, D, D) = 2.0 * g.asDiagonal() * Hs;
        J.block(D, D, D, D) = -I;
        J.block(D, 2 * D, D, D) = Hs;
        J.block(2 * D, 0, D, D) = (0.5 * m / v_eps.pow(1.5)).matrix().asDiagonal();
        J.block(2 * D, D, D, D) = (-v_eps.rsqrt()).matrix().asDiagonal();
        break;
      }
    }
    return J;
  }

  /// ∇h(z) = Σ_i μ_i ∂H(z, i)/∂z.
  Eigen::MatrixXd mean_jacobian(const Eigen::VectorXd& z, const Eigen::VectorXd& mu) const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim(), dim());
    for (Node i = 0; i < objective_.nodes(); ++i) J += mu[i] * node_jacobian(z, i);
    return J;
  }

  /// Augmented root z* for a stationary point θ* of f: m* = 0 and
  /// v* = Σ_i μ_i ∇F(θ*, i)².
  Eigen::VectorXd root(const Eigen::VectorXd& theta_star, const Eigen::VectorXd& mu) const {
    const auto D = theta_dim();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim());
    switch (variant_) {
      case DriftVariant::sgd: z = theta_star; break;
      case DriftVariant::shb: z.head(D) = theta_star; break;
      case DriftVariant::momentum: {
        Eigen::VectorXd gi(D);
        for (Node i = 0; i < objective_.nodes(); ++i) {
          objective_.grad(theta_star, i, gi);
          z.head(D) += mu[i] * gi.array().square().matrix();
        }
        z.tail(D) = theta_star;
        break;
      }
    }
    return z;
  }

  /// Rows H(z, i)ᵀ for every node.
  DriftMatrix drift_matrix(const Eigen::VectorXd& z) const {
    DriftMatrix H{Eigen::MatrixXd(objective_.nodes(), dim())};
    Eigen::VectorXd hi(dim());
    for (Node i = 0; i < objective_.nodes(); ++i) {
      evaluate(z, i, hi);
      H.H.row(i) = hi.transpose();
    }
    return H;
  }

 private:
  Objective objective_;
  DriftVariant variant_;
  double epsilon_;
};

inline DriftField make_drift(const Objective& obj, DriftVariant variant, double epsilon = 1e-8) {
  return DriftField(obj, variant, epsilon);
}

/// Root of the mean field plus everything the covariance formulas need there.
struct ThetaStar {
  Eigen::VectorXd theta;
  Eigen::VectorXd z;          ///< augmented root
  Eigen::MatrixXd grad_h;     ///< ∇h(z*) of the augmented drift
  DriftMatrix H;              ///< H(z*, ·)
  double grad_norm = 0.0;     ///< ‖∇f(θ*)‖
  std::size_t iterations = 0;
};

struct SolverOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 1'000'000;
  double b_exponent = 0.9;  ///< Hurwitz check uses ∇h + ½1{b=1}I
};

namespace detail {

/// Full-batch gradient descent with Armijo backtracking from `theta`.
/// Once the predicted decrease falls below the resolution of f, steps are
/// judged by the gradient norm instead.
inline std::pair<Eigen::VectorXd, std::size_t> gradient_descent(const Objective& obj,
                                                                const Eigen::VectorXd& mu,
                                                                Eigen::VectorXd theta,
                                                                const SolverOptions& opt) {
  double step = 1.0;
  Eigen::VectorXd g = obj.mean_grad(theta, mu);
  double f = obj.mean_loss(theta, mu);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const double gn2 = g.squaredNorm();
    if (std::sqrt(gn2) <= opt.tolerance) return {std::move(theta), it};
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    for (int tries = 0; tries < 200; ++tries, step *= 0.5) {
      Eigen::VectorXd trial = theta - step * g;
      const double f_trial = obj.mean_loss(trial, mu);
      Eigen::VectorXd g_trial = obj.mean_grad(trial, mu);
      const bool below_resolution = step * gn2 <= 1e-12 * std::max(1.0, std::abs(f));
      const bool accept = below_resolution ? g_trial.squaredNorm() < gn2 : f_trial <= f - 1e-4 * step * gn2;
      if (std::isfinite(f_trial) && accept) {
        theta = std::move(trial);
        g = std::move(g_trial);
        f = f_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  const double gn = g.norm();
  if (gn <= opt.tolerance) return {std::move(theta), opt.max_iterations};
  throw NumericalError("gradient descent did not converge; final gradient norm " + std::to_string(gn));
}

}  // namespace detail

/// Solves ∇f(θ*) = 0 by full-batch gradient descent and evaluates the drift
/// Jacobian ∇h(z*) and drift matrix H(z*, ·). Throws NumericalError when the
/// solver stalls or ∇h + ½1{b=1}I is not Hurwitz.
inline ThetaStar solve_theta_star(const DriftField& drift, const Eigen::VectorXd& mu,
                                  const Eigen::VectorXd& theta0, const SolverOptions& opt = {}) {
  const auto& obj = drift.objective();
  if (mu.size() != obj.nodes()) throw ValidationError("target distribution size does not match objective");
  if (theta0.size() != obj.dim()) throw ValidationError("initial point has wrong dimension");
  ThetaStar out;
  std::tie(out.theta, out.iterations) = detail::gradient_descent(obj, mu, theta0, opt);
  out.grad_norm = obj.mean_grad(out.theta, mu).norm();
  out.z = drift.root(out.theta, mu);
  out.grad_h = drift.mean_jacobian(out.z, mu);
  out.H = drift.drift_matrix(out.z);
  Eigen::MatrixXd A = out.grad_h;
  A.diagonal().array() += opt.b_exponent == 1.0 ? 0.5 : 0.0;
  detail::require_hurwitz(eigenvalues(A), 0.0);
  return out;
}

inline ThetaStar solve_theta_star(const DriftField& drift, const Eigen::VectorXd& mu,
                                  const SolverOptions& opt = {}) {
  return solve_theta_star(drift, mu, Eigen::VectorXd::Zero(drift.theta_dim()), opt);
}

}  // namespace tokenwalk
