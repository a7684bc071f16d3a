#pragma once

// Empirical hierarchical prior for the current experiment's effects.
//
// Model: mu ~ flat, w_i | mu ~ N(mu, Gamma), x_i | w_i ~ N(w_i, Sigma_i).
// Integrating mu out given the historical x_i gives
//   mu | x_{-t} ~ N(H^-1 nu, H^-1),  H = sum (Sigma_i + Gamma)^-1,
//                                    nu = sum (Sigma_i + Gamma)^-1 x_i,
// and therefore w_t | x_{-t} ~ N(H^-1 nu, Gamma + H^-1).
// Gamma = k * Theta_hat with Theta_hat the uncentred second moment of the
// historical estimates.

#include "bayesdecide/experiment.hpp"
#include "bayesdecide/io.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

namespace bayesdecide {

/// Shrinkage strength k in Gamma = k * Theta_hat. Infinity means no pooling.
class ShrinkageLevel {
public:
  constexpr ShrinkageLevel() = default;
  explicit ShrinkageLevel(double k) : k_(k) {
    if (!(k >= 0.0))
      throw std::invalid_argument("shrinkage level k must be >= 0");
  }

  static ShrinkageLevel complete_pooling() { return ShrinkageLevel(0.0); }
  static ShrinkageLevel moderate() { return ShrinkageLevel(1.0); }
  static ShrinkageLevel none() { return ShrinkageLevel(std::numeric_limits<double>::infinity()); }

  /// Accepts "inf" (also "infinity", "none") or a nonnegative number.
  static ShrinkageLevel parse(const std::string &s) {
    if (s == "inf" || s == "infinity" || s == "Inf" || s == "none")
      return none();
    double v;
    try {
      v = io::parse_double(s);
    } catch (const FormatError &) {
      throw std::invalid_argument("bad k '" + s + "': expected 0, 1, inf or a nonnegative number");
    }
    if (std::isnan(v) || v < 0)
      throw std::invalid_argument("bad k '" + s + "': must be nonnegative");
    return ShrinkageLevel(v);
  }

  double value() const { return k_; }
  bool is_infinite() const { return std::isinf(k_); }

  std::string to_string() const { return is_infinite() ? "inf" : io::format_double(k_); }

  json to_json() const { return is_infinite() ? json("inf") : json(k_); }

  bool operator==(const ShrinkageLevel &) const = default;

private:
  double k_ = 1.0;
};

struct HierParams {
  Matrix theta_hat;
  Matrix gamma;
  Vector nu;
  Matrix H; // precision of mu given the history
  std::size_t history_count = 0;
};

/// Prior that carries no information; the posterior equals the likelihood.
struct FlatPrior {};

struct HierarchicalPrior {
  Gaussian gaussian; // mean m0 = H^-1 nu, cov Omega = Gamma + H^-1
  HierParams params;
};

using Prior = std::variant<FlatPrior, HierarchicalPrior>;

inline bool is_flat(const Prior &p) { return std::holds_alternative<FlatPrior>(p); }

/// (1/(t-1)) sum x_i x_i^T, uncentred. Ridge-jittered when numerically
/// singular (always the case when t-1 < n).
inline Matrix empirical_theta(std::span<const ExperimentRecord> history) {
  if (history.empty())
    throw std::invalid_argument("empirical_theta needs at least one historical experiment");
  const auto n = history.front().x.size();
  Matrix theta = Matrix::Zero(n, n);
  for (const auto &r : history) {
    if (r.x.size() != n)
      throw std::invalid_argument("history records disagree on dimension");
    theta.noalias() += r.x * r.x.transpose();
  }
  theta /= static_cast<double>(history.size());
  theta = linalg::symmetrize(theta);

  const double scale = linalg::mean_diagonal(theta);
  if (scale > 0.0) {
    if (linalg::min_eigenvalue(theta) < linalg::kRidgeRel * scale)
      theta.diagonal().array() += linalg::kRidgeRel * scale;
  }
  return theta;
}

/// Builds the prior from the history for shrinkage level k. Empty history
/// or k = inf short-circuits to FlatPrior.
inline Prior build_prior(std::span<const ExperimentRecord> history, ShrinkageLevel k) {
  if (history.empty() || k.is_infinite())
    return FlatPrior{};

  const auto n = history.front().x.size();
  HierParams p;
  p.history_count = history.size();
  p.theta_hat = empirical_theta(history);
  p.gamma = k.value() * p.theta_hat;
  p.nu = Vector::Zero(n);
  p.H = Matrix::Zero(n, n);
  for (const auto &r : history) {
    if (r.sigma.rows() != n || r.sigma.cols() != n)
      throw std::invalid_argument("history record '" + r.id + "' has mismatched sigma");
    Matrix total = linalg::symmetrize(r.sigma + p.gamma);
    if (!linalg::ridge_repair(total))
      throw NumericalError("Sigma_i + Gamma is singular for '" + r.id + "' and cannot be repaired");
    Eigen::LDLT<Matrix> ldlt(total);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalError("Sigma_i + Gamma is not positive definite for '" + r.id + "'");
    p.nu += ldlt.solve(r.x);
    p.H += ldlt.solve(Matrix::Identity(n, n));
  }
  p.H = linalg::symmetrize(p.H);

  Eigen::LDLT<Matrix> h_ldlt(p.H);
  if (h_ldlt.info() != Eigen::Success || !h_ldlt.isPositive())
    throw NumericalError("pooled precision is not positive definite");
  HierarchicalPrior prior;
  prior.gaussian.mean = h_ldlt.solve(p.nu);
  prior.gaussian.cov =
      linalg::symmetrize(p.gamma + h_ldlt.solve(Matrix::Identity(n, n)));
  prior.params = std::move(p);
  return prior;
}

/// Report layout: standard deviations on the diagonal, correlations off it.
inline Matrix sd_correlation_matrix(const Matrix &cov) {
  const auto n = cov.rows();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        out(i, j) = std::sqrt(std::max(cov(i, i), 0.0));
      } else {
        const double d = std::sqrt(std::max(cov(i, i), 0.0) * std::max(cov(j, j), 0.0));
        out(i, j) = d > 0.0 ? cov(i, j) / d : 0.0;
      }
    }
  return out;
}

} // namespace bayesdecide
