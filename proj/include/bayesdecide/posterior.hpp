#pragma once

#include "bayesdecide/hier_prior.hpp"
#include "bayesdecide/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bayesdecide {

/// Conjugate update of a Gaussian prior N(m0, Omega) with likelihood
/// x_t ~ N(w, Sigma_t). Uses the factorization of S = Sigma_t + Omega:
///   tau   = m0 + Omega S^-1 (x_t - m0)
///   Delta = Omega - Omega S^-1 Omega  (= Sigma_t - Sigma_t S^-1 Sigma_t)
/// which equals (Sigma_t^-1 + Omega^-1)^-1 without inverting either term.
inline Gaussian posterior_update(const Gaussian &prior, const Vector &x_t, const Matrix &sigma_t) {
  const auto n = x_t.size();
  if (prior.mean.size() != n || prior.cov.rows() != n || prior.cov.cols() != n ||
      sigma_t.rows() != n || sigma_t.cols() != n)
    throw std::invalid_argument("posterior_update: dimension mismatch");
  if (!linalg::is_symmetric(sigma_t) || !linalg::is_psd(sigma_t))
    throw std::invalid_argument("posterior_update: sigma_t is not symmetric PSD");

  const Matrix S = linalg::symmetrize(sigma_t + prior.cov);
  Eigen::LDLT<Matrix> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      linalg::min_eigenvalue(S) <= 0.0)
    throw NumericalError("posterior_update: Sigma_t + Omega is not positive definite");

  // Subtract from whichever of the two matrices is smaller so the
  // difference does not cancel catastrophically.
  const bool prior_smaller = prior.cov.trace() <= sigma_t.trace();
  const Matrix &ref = prior_smaller ? prior.cov : sigma_t;
  const Matrix gain = ldlt.solve(ref).transpose(); // ref * S^-1 (both symmetric)

  Gaussian post;
  post.cov = linalg::symmetrize(ref - gain * ref);
  if (prior_smaller)
    post.mean = prior.mean + gain * (x_t - prior.mean);
  else
    post.mean = x_t + gain * (prior.mean - x_t);
  return post;
}

/// Flat prior returns the likelihood unchanged.
inline Gaussian posterior_update(const Prior &prior, const Vector &x_t, const Matrix &sigma_t) {
  if (const auto *h = std::get_if<HierarchicalPrior>(&prior))
    return posterior_update(h->gaussian, x_t, sigma_t);
  if (sigma_t.rows() != x_t.size() || sigma_t.cols() != x_t.size())
    throw std::invalid_argument("posterior_update: dimension mismatch");
  return Gaussian{x_t, sigma_t};
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

struct CredibleInterval {
  double low = 0.0;
  double high = 0.0;
  bool significant = false; // interval excludes 0
};

struct PosteriorSummary {
  Gaussian gaussian;
  std::vector<CredibleInterval> intervals;
  ShrinkageLevel k_used;
  double level = 0.95;

  std::vector<bool> significant() const {
    std::vector<bool> out;
    for (const auto &ci : intervals)
      out.push_back(ci.significant);
    return out;
  }
};

/// Central normal intervals tau_j +- z * sqrt(Delta_jj) at `level`.
inline PosteriorSummary summarize(const Gaussian &post, ShrinkageLevel k, double level = 0.95) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible level must be in (0, 1)");
  const double z = normal_quantile(0.5 + 0.5 * level);
  PosteriorSummary s{post, {}, k, level};
  for (Eigen::Index j = 0; j < post.mean.size(); ++j) {
    const double half = z * std::sqrt(std::max(post.cov(j, j), 0.0));
    CredibleInterval ci{post.mean[j] - half, post.mean[j] + half, false};
    ci.significant = ci.low > 0.0 || ci.high < 0.0;
    s.intervals.push_back(ci);
  }
  return s;
}

enum class Direction { greater, less, any };

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

inline constexpr std::uint64_t kMinJointSamples = 1000;

/// Draws N(mean, cov) samples column by column from child streams of seed.
/// Block b of 4096 draws uses its own stream.
template <class Visitor>
void for_each_draw(const Gaussian &g, std::uint64_t samples, std::uint64_t seed, Visitor &&visit) {
  const auto n = g.mean.size();
  const Matrix root = linalg::psd_sqrt(g.cov);
  const std::uint64_t stream = rng::child_seed(seed, rng::kPosteriorDrawStream);
  constexpr std::uint64_t block = 4096;
  Vector z(n), w(n);
  for (std::uint64_t start = 0, b = 0; start < samples; start += block, ++b) {
    Engine eng = rng::child_engine(stream, b);
    std::normal_distribution<double> normal;
    const std::uint64_t end = std::min(samples, start + block);
    for (std::uint64_t s = start; s < end; ++s) {
      for (Eigen::Index i = 0; i < n; ++i)
        z[i] = normal(eng);
      w.noalias() = g.mean + root * z;
      visit(static_cast<const Vector &>(w));
    }
  }
}

/// Monte Carlo P(every metric satisfies its direction against its
/// threshold) under `post`. Metrics with Direction::any are unconstrained.
inline MonteCarloEstimate joint_success_probability(const Gaussian &post,
                                                    const std::vector<Direction> &directions,
                                                    const Vector &thresholds,
                                                    std::uint64_t samples, std::uint64_t seed) {
  const auto n = post.mean.size();
  if (static_cast<Eigen::Index>(directions.size()) != n || thresholds.size() != n)
    throw std::invalid_argument("joint_success_probability: dimension mismatch");
  if (samples < kMinJointSamples)
    throw std::invalid_argument("joint_success_probability needs at least 1000 samples");
  std::uint64_t hits = 0;
  for_each_draw(post, samples, seed, [&](const Vector &w) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto d = directions[static_cast<std::size_t>(i)];
      if ((d == Direction::greater && !(w[i] > thresholds[i])) ||
          (d == Direction::less && !(w[i] < thresholds[i])))
        return;
    }
    ++hits;
  });
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples};
}

} // namespace bayesdecide
