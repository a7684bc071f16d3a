#pragma once

// Effect estimates and their sampling covariance from unit-level outcomes.

#include "bayesdecide/experiment.hpp"
#include "bayesdecide/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bayesdecide {

struct BootstrapConfig {
  int replicates = 1000;
  std::uint64_t seed = 0;
  // Worker threads; output does not depend on this.
  unsigned threads = 1;
};

namespace detail {

struct ArmSplit {
  std::vector<const Vector *> treatment;
  std::vector<const Vector *> control;
};

inline ArmSplit split_arms(std::span<const UnitOutcomes> data) {
  ArmSplit s;
  for (const auto &u : data)
    (u.arm == Arm::treatment ? s.treatment : s.control).push_back(&u.outcomes);
  return s;
}

inline Eigen::Index metric_count(std::span<const UnitOutcomes> data) {
  const auto n = data.front().outcomes.size();
  for (const auto &u : data)
    if (u.outcomes.size() != n)
      throw std::invalid_argument("units disagree on the number of metrics");
  return n;
}

inline Vector arm_mean(const std::vector<const Vector *> &arm, Eigen::Index n) {
  Vector sum = Vector::Zero(n);
  for (const auto *v : arm)
    sum += *v;
  return sum / static_cast<double>(arm.size());
}

} // namespace detail

/// Difference in means, treatment minus control, per metric.
inline Vector estimate_effects(std::span<const UnitOutcomes> data) {
  if (data.empty())
    throw std::invalid_argument("no units");
  const auto n = detail::metric_count(data);
  const auto arms = detail::split_arms(data);
  if (arms.treatment.empty() || arms.control.empty())
    throw std::invalid_argument("both arms need at least one unit");
  return detail::arm_mean(arms.treatment, n) - detail::arm_mean(arms.control, n);
}

/// Covariance (denominator B-1) of B difference-in-means replicates, each
/// computed from a within-arm resample with replacement. Replicate r draws
/// from its own child stream of cfg.seed.
inline Matrix bootstrap_sigma(std::span<const UnitOutcomes> data, const BootstrapConfig &cfg) {
  if (cfg.replicates < 2)
    throw std::invalid_argument("bootstrap needs at least 2 replicates");
  if (data.empty())
    throw std::invalid_argument("no units");
  const auto n = detail::metric_count(data);
  const auto arms = detail::split_arms(data);
  if (arms.treatment.size() < 2 || arms.control.size() < 2)
    throw std::invalid_argument("bootstrap needs at least 2 units per arm");

  const auto B = static_cast<std::size_t>(cfg.replicates);
  const std::uint64_t stream = rng::child_seed(cfg.seed, rng::kBootstrapStream);
  Matrix reps(n, static_cast<Eigen::Index>(B));

  auto resampled_mean = [n](const std::vector<const Vector *> &arm, Engine &eng) {
    std::uniform_int_distribution<std::size_t> pick(0, arm.size() - 1);
    Vector sum = Vector::Zero(n);
    for (std::size_t i = 0; i < arm.size(); ++i)
      sum += *arm[pick(eng)];
    return Vector(sum / static_cast<double>(arm.size()));
  };
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Engine eng = rng::child_engine(stream, r);
      Vector t = resampled_mean(arms.treatment, eng);
      Vector c = resampled_mean(arms.control, eng);
      reps.col(static_cast<Eigen::Index>(r)) = t - c;
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, B);
  if (workers == 1) {
    run(0, B);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (B + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk, hi = std::min(B, lo + chunk);
      if (lo < hi)
        pool.emplace_back(run, lo, hi);
    }
  }

  const Vector mean = reps.rowwise().mean();
  const Matrix centered = reps.colwise() - mean;
  return linalg::symmetrize(centered * centered.transpose() / static_cast<double>(B - 1));
}

/// Bootstraps an ExperimentRecord from unit-level data.
inline ExperimentRecord bootstrap_record(std::string id, std::int64_t timestamp,
                                         MetricSchema schema, std::span<const UnitOutcomes> data,
                                         const BootstrapConfig &cfg) {
  ExperimentRecord rec;
  rec.id = std::move(id);
  rec.timestamp = timestamp;
  rec.schema = std::move(schema);
  rec.x = estimate_effects(data);
  rec.sigma = bootstrap_sigma(data, cfg);
  rec.provenance = Provenance::bootstrapped;
  return rec;
}

} // namespace bayesdecide
