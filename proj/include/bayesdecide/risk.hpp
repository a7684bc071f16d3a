#pragma once

// Expected risks of launch (a1) and roll-back (a0) under a posterior.
//
// Linear loss with trade-off vector Lambda and weights g = G(Lambda):
//   R(a1) = -g^T tau + c1,   R(a0) = g^T tau + c0.
// Only the posterior mean enters; the covariance matters for custom losses
// and joint success probabilities.

#include "bayesdecide/posterior.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayesdecide {

enum class Action { rollback = 0, launch = 1 };

inline const char *to_string(Action a) { return a == Action::launch ? "launch" : "rollback"; }

/// Loss of taking `action` when the true effects are `w`.
using LossCallback = std::function<double(Action action, const Vector &w)>;

struct LossSpec {
  Vector tradeoffs;   // Lambda; 0 excludes a metric, sign encodes direction
  double c0 = 0.0;    // roll-back cost
  double c1 = 0.0;    // launch cost
  LossCallback custom; // empty => linear loss

  bool is_linear() const { return !custom; }

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    if (tradeoffs.size() == 0 || (tradeoffs.array() == 0.0).all())
      v.emplace_back("trade-off vector needs at least one nonzero entry");
    if (!tradeoffs.allFinite())
      v.emplace_back("trade-offs must be finite");
    if (!std::isfinite(c0) || !std::isfinite(c1))
      v.emplace_back("costs must be finite");
    return v;
  }
};

/// Reciprocal normalization: entry i maps to (1/l_i) / sum_j 1/|l_j| over
/// the nonzero entries; zero entries map to 0. Evaluated as
/// sign(l_i) / sum_j |l_i|/|l_j| so the result is unchanged by any exact
/// rescaling of the input.
inline Vector g_transform(const Vector &lambda) {
  if (lambda.size() == 0 || (lambda.array() == 0.0).all())
    throw std::invalid_argument("g_transform: trade-off vector is all zero");
  if (!lambda.allFinite())
    throw std::invalid_argument("g_transform: trade-offs must be finite");
  Vector out = Vector::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] == 0.0)
      continue;
    const double ai = std::abs(lambda[i]);
    double denom = 0.0;
    for (Eigen::Index j = 0; j < lambda.size(); ++j)
      if (lambda[j] != 0.0)
        denom += ai / std::abs(lambda[j]);
    out[i] = std::copysign(1.0, lambda[i]) / denom;
  }
  return out;
}

/// The loss with the raw trade-offs as weights (no G transform), usable
/// as a custom callback.
inline LossCallback direct_linear_loss(Vector lambda, double c0, double c1) {
  return [lambda = std::move(lambda), c0, c1](Action a, const Vector &w) {
    const double value = lambda.dot(w);
    return a == Action::launch ? -value + c1 : value + c0;
  };
}

/// The G-weighted linear loss as a callback; its expected value is the
/// closed-form linear risk.
inline LossCallback weighted_linear_loss(const Vector &lambda, double c0, double c1) {
  return direct_linear_loss(g_transform(lambda), c0, c1);
}

/// Raises the weight share of `metric` by dividing its trade-off by
/// `inflation` (G weights are proportional to 1/|lambda|).
inline LossSpec guardrail(const LossSpec &loss, std::size_t metric, double inflation) {
  if (!(inflation > 0.0) || !std::isfinite(inflation))
    throw std::invalid_argument("guardrail: inflation must be positive");
  if (static_cast<Eigen::Index>(metric) >= loss.tradeoffs.size())
    throw std::out_of_range("guardrail: metric index out of range");
  if (loss.tradeoffs[static_cast<Eigen::Index>(metric)] == 0.0)
    throw std::invalid_argument("guardrail: metric is excluded (zero trade-off)");
  LossSpec out = loss;
  out.tradeoffs[static_cast<Eigen::Index>(metric)] /= inflation;
  return out;
}

struct DecisionReport {
  double risk_launch = 0.0;
  double risk_rollback = 0.0;
  Action recommendation = Action::rollback;
  Vector weights;
  PosteriorSummary posterior;
  // Set for Monte Carlo (custom-loss) risks only.
  std::optional<double> se_launch;
  std::optional<double> se_rollback;
  std::optional<std::uint64_t> mc_samples;
  std::optional<MonteCarloEstimate> joint_success;
};

struct MonteCarloOptions {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
};

/// Strict comparison; ties go to roll-back.
inline Action recommend(double risk_launch, double risk_rollback) {
  return risk_launch < risk_rollback ? Action::launch : Action::rollback;
}

inline DecisionReport expected_risks(const PosteriorSummary &post, const LossSpec &loss,
                                     const MonteCarloOptions &mc = {}) {
  if (auto v = loss.violations(); !v.empty())
    throw ValidationError(v);
  const auto &g = post.gaussian;
  if (loss.tradeoffs.size() != g.mean.size())
    throw std::invalid_argument("expected_risks: trade-offs and posterior differ in dimension");

  DecisionReport rep;
  rep.posterior = post;
  rep.weights = g_transform(loss.tradeoffs);
  if (loss.is_linear()) {
    const double value = rep.weights.dot(g.mean);
    rep.risk_launch = -value + loss.c1;
    rep.risk_rollback = value + loss.c0;
  } else {
    if (mc.samples < 2)
      throw std::invalid_argument("expected_risks: need at least 2 Monte Carlo samples");
    // Welford accumulation per action.
    double mean[2] = {0.0, 0.0}, m2[2] = {0.0, 0.0};
    std::uint64_t count = 0;
    for_each_draw(g, mc.samples, mc.seed, [&](const Vector &w) {
      ++count;
      for (int a = 0; a < 2; ++a) {
        const double l = loss.custom(static_cast<Action>(a), w);
        if (!std::isfinite(l))
          throw std::domain_error("custom loss returned a non-finite value");
        const double d = l - mean[a];
        mean[a] += d / static_cast<double>(count);
        m2[a] += d * (l - mean[a]);
      }
    });
    const double N = static_cast<double>(count);
    rep.risk_rollback = mean[0];
    rep.risk_launch = mean[1];
    rep.se_rollback = std::sqrt(m2[0] / (N - 1.0) / N);
    rep.se_launch = std::sqrt(m2[1] / (N - 1.0) / N);
    rep.mc_samples = count;
  }
  rep.recommendation = recommend(rep.risk_launch, rep.risk_rollback);
  return rep;
}

/// Success directions implied by the trade-off signs: metrics we value
/// positively must go up, cost-like metrics down, excluded metrics free.
inline std::vector<Direction> success_directions(const Vector &tradeoffs) {
  std::vector<Direction> d;
  for (Eigen::Index i = 0; i < tradeoffs.size(); ++i)
    d.push_back(tradeoffs[i] > 0 ? Direction::greater
                                 : tradeoffs[i] < 0 ? Direction::less : Direction::any);
  return d;
}

struct GridAxis {
  std::size_t metric = 0;
  std::vector<double> values;
};

struct GridPoint {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double risk_launch = 0.0;
  double risk_rollback = 0.0;
  Action decision = Action::rollback;
};

struct DecisionSpace {
  std::size_t axis1_metric = 0;
  std::size_t axis2_metric = 0;
  std::vector<GridPoint> points; // row-major: axis1 outer, axis2 inner
  std::vector<std::pair<double, double>> skipped; // all-zero trade-off vectors

  std::size_t size() const { return points.size(); }
};

/// Evaluates the linear-loss decision at every (axis1, axis2) trade-off
/// pair, holding the other trade-offs at `fixed`. Each point uses the same
/// rule as expected_risks.
inline DecisionSpace decision_space(const Gaussian &post, const GridAxis &axis1,
                                    const GridAxis &axis2, const Vector &fixed, double c0,
                                    double c1) {
  const auto n = post.mean.size();
  if (fixed.size() != n)
    throw std::invalid_argument("decision_space: fixed trade-offs must cover every metric");
  if (axis1.metric == axis2.metric)
    throw std::invalid_argument("decision_space: axes must be distinct metrics");
  if (static_cast<Eigen::Index>(std::max(axis1.metric, axis2.metric)) >= n)
    throw std::out_of_range("decision_space: axis metric out of range");
  if (axis1.values.empty() || axis2.values.empty())
    throw std::invalid_argument("decision_space: grid is empty");
  if (!std::isfinite(c0) || !std::isfinite(c1) || !fixed.allFinite())
    throw std::invalid_argument("decision_space: costs and trade-offs must be finite");

  DecisionSpace space;
  space.axis1_metric = axis1.metric;
  space.axis2_metric = axis2.metric;
  space.points.reserve(axis1.values.size() * axis2.values.size());
  Vector lambda = fixed;
  for (double v1 : axis1.values) {
    for (double v2 : axis2.values) {
      lambda[static_cast<Eigen::Index>(axis1.metric)] = v1;
      lambda[static_cast<Eigen::Index>(axis2.metric)] = v2;
      if ((lambda.array() == 0.0).all()) {
        space.skipped.emplace_back(v1, v2);
        continue;
      }
      const double value = g_transform(lambda).dot(post.mean);
      GridPoint p{v1, v2, -value + c1, value + c0, Action::rollback};
      p.decision = recommend(p.risk_launch, p.risk_rollback);
      space.points.push_back(p);
    }
  }
  return space;
}

} // namespace bayesdecide
