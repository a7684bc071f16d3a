#pragma once

// Simulation studies: permutation nulls, synthetic hierarchical data,
// temporal leave-one-out posteriors per shrinkage level, MSE / coverage
// summaries and significance-flip listings.

#include "bayesdecide/bootstrap.hpp"
#include "bayesdecide/posterior.hpp"
#include "bayesdecide/registry.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bayesdecide {

/// Unit-level data of one experiment.
struct ExperimentUnits {
  std::string id;
  std::int64_t timestamp = 0;
  MetricSchema schema;
  std::vector<UnitOutcomes> units;
};

/// Relabels arms: unit i receives the arm unit perm[i] had. Arm sizes are
/// preserved for any permutation.
inline std::vector<UnitOutcomes> permute_arms(std::span<const UnitOutcomes> units,
                                              std::span<const std::size_t> perm) {
  if (perm.size() != units.size())
    throw std::invalid_argument("permutation length differs from unit count");
  std::vector<UnitOutcomes> out(units.begin(), units.end());
  for (std::size_t i = 0; i < units.size(); ++i)
    out[i].arm = units[perm[i]].arm;
  return out;
}

/// Shuffles the arm labels of every experiment uniformly (the true effect is
/// then 0) and re-estimates x and Sigma. Experiment e uses child streams of
/// `seed` indexed by e, so results do not depend on processing order.
inline RecordList permutation_null(std::span<const ExperimentUnits> data, std::uint64_t seed,
                                   int bootstrap_replicates = 1000) {
  RecordList out;
  const std::uint64_t perm_stream = rng::child_seed(seed, rng::kPermutationStream);
  for (std::size_t e = 0; e < data.size(); ++e) {
    const auto &exp = data[e];
    std::size_t nt = 0, nc = 0;
    for (const auto &u : exp.units)
      (u.arm == Arm::treatment ? nt : nc) += 1;
    if (nt < 2 || nc < 2)
      throw std::invalid_argument("experiment '" + exp.id + "' needs at least 2 units per arm");
    std::vector<std::size_t> perm(exp.units.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Engine eng = rng::child_engine(perm_stream, e);
    std::shuffle(perm.begin(), perm.end(), eng);
    const auto shuffled = permute_arms(exp.units, perm);
    BootstrapConfig cfg{bootstrap_replicates, rng::child_seed(seed, e), 1};
    out.push_back(bootstrap_record(exp.id, exp.timestamp, exp.schema, shuffled, cfg));
  }
  std::sort(out.begin(), out.end(), record_order);
  return out;
}

enum class Generator { permutation_null, hierarchical_synthetic };

inline const char *to_string(Generator g) {
  return g == Generator::permutation_null ? "permutation_null" : "hierarchical_synthetic";
}

struct SimConfig {
  int n_experiments = 20;
  int n_metrics = 3;
  std::vector<ShrinkageLevel> k_values{ShrinkageLevel::complete_pooling(),
                                       ShrinkageLevel::moderate(), ShrinkageLevel::none()};
  std::uint64_t seed = 0;
  Generator generator = Generator::hierarchical_synthetic;
  double level = 0.95;

  // hierarchical_synthetic: mu ~ N(0, mu_sd^2 I), w_i ~ N(mu, gamma_sd^2 R),
  // x_i ~ N(w_i, Sigma_i) with Sigma_i = sigma_scale * s_i * (A A^T / n + I) / 2,
  // s_i ~ U(0.5, 2), A standard normal. R has constant correlation.
  double mu_sd = 1.0;
  double gamma_sd = 0.25;
  double sigma_scale = 1.0;
  double correlation = 0.3;

  // permutation_null: synthetic unit-level experiments, shuffled.
  int units_per_arm = 100;
  int bootstrap_replicates = 200;
  double effect_sd = 1.0;
  std::vector<double> metric_scales; // per-metric outcome sd; empty => all 1

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    if (n_experiments < 2)
      v.emplace_back("n_experiments must be >= 2");
    if (n_metrics < 1)
      v.emplace_back("n_metrics must be >= 1");
    if (k_values.empty())
      v.emplace_back("k_values must not be empty");
    if (!(level > 0.0 && level < 1.0))
      v.emplace_back("level must be in (0, 1)");
    if (mu_sd < 0 || gamma_sd < 0 || sigma_scale <= 0)
      v.emplace_back("mu_sd, gamma_sd must be >= 0 and sigma_scale > 0");
    if (!(correlation > -1.0 / std::max(1, n_metrics - 1) && correlation < 1.0) && n_metrics > 1)
      v.emplace_back("correlation must keep the correlation matrix positive definite");
    if (units_per_arm < 2)
      v.emplace_back("units_per_arm must be >= 2");
    if (bootstrap_replicates < 2)
      v.emplace_back("bootstrap_replicates must be >= 2");
    if (!metric_scales.empty() && static_cast<int>(metric_scales.size()) != n_metrics)
      v.emplace_back("metric_scales must have n_metrics entries");
    return v;
  }

  MetricSchema schema() const {
    MetricSchema s;
    for (int j = 0; j < n_metrics; ++j)
      s.names.push_back("M" + std::to_string(j + 1));
    return s;
  }
};

/// A record together with the effect that generated it.
struct SimulatedExperiment {
  ExperimentRecord record;
  Vector truth;
};

namespace detail {

inline Matrix constant_correlation(Eigen::Index n, double rho) {
  Matrix r = Matrix::Constant(n, n, rho);
  r.diagonal().setOnes();
  return r;
}

inline Vector standard_normal(Engine &eng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i)
    z[i] = normal(eng);
  return z;
}

} // namespace detail

inline std::vector<SimulatedExperiment> generate_hierarchical(const SimConfig &cfg) {
  if (auto v = cfg.violations(); !v.empty())
    throw ValidationError(v);
  const Eigen::Index n = cfg.n_metrics;
  const std::uint64_t stream = rng::child_seed(cfg.seed, rng::kSimulationStream);
  Engine root = rng::child_engine(stream, 0);
  const Vector mu = cfg.mu_sd * detail::standard_normal(root, n);
  const Matrix gamma_root =
      linalg::psd_sqrt(cfg.gamma_sd * cfg.gamma_sd * detail::constant_correlation(n, cfg.correlation));
  const MetricSchema schema = cfg.schema();

  std::vector<SimulatedExperiment> out;
  for (int e = 0; e < cfg.n_experiments; ++e) {
    Engine eng = rng::child_engine(stream, static_cast<std::uint64_t>(e) + 1);
    std::uniform_real_distribution<double> spread(0.5, 2.0);
    const double s = spread(eng);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      a.col(i) = detail::standard_normal(eng, n);
    Matrix sigma = a * a.transpose() / static_cast<double>(n);
    sigma.diagonal().array() += 1.0;
    sigma = linalg::symmetrize(cfg.sigma_scale * s * 0.5 * sigma);

    SimulatedExperiment se;
    se.truth = mu + gamma_root * detail::standard_normal(eng, n);
    se.record.id = "sim-" + std::to_string(e + 1);
    se.record.timestamp = e + 1;
    se.record.schema = schema;
    se.record.x = se.truth + linalg::psd_sqrt(sigma) * detail::standard_normal(eng, n);
    se.record.sigma = std::move(sigma);
    se.record.provenance = Provenance::supplied;
    out.push_back(std::move(se));
  }
  return out;
}

/// Synthetic unit-level experiments with nonzero, heterogeneous effects and
/// correlated metrics; input to permutation_null.
inline std::vector<ExperimentUnits> generate_unit_experiments(const SimConfig &cfg) {
  if (auto v = cfg.violations(); !v.empty())
    throw ValidationError(v);
  const Eigen::Index n = cfg.n_metrics;
  Vector scales = Vector::Ones(n);
  for (std::size_t j = 0; j < cfg.metric_scales.size(); ++j)
    scales[static_cast<Eigen::Index>(j)] = cfg.metric_scales[j];
  const Matrix noise_root =
      scales.asDiagonal() * linalg::psd_sqrt(detail::constant_correlation(n, cfg.correlation));
  const std::uint64_t stream = rng::child_seed(cfg.seed, rng::kSimulationStream + 1);
  const MetricSchema schema = cfg.schema();

  std::vector<ExperimentUnits> out;
  for (int e = 0; e < cfg.n_experiments; ++e) {
    Engine eng = rng::child_engine(stream, static_cast<std::uint64_t>(e));
    const Vector effect =
        cfg.effect_sd * scales.cwiseProduct(detail::standard_normal(eng, n));
    ExperimentUnits exp;
    exp.id = "exp-" + std::to_string(e + 1);
    exp.timestamp = e + 1;
    exp.schema = schema;
    for (int u = 0; u < 2 * cfg.units_per_arm; ++u) {
      UnitOutcomes unit;
      unit.unit_id = "u" + std::to_string(u + 1);
      unit.arm = u < cfg.units_per_arm ? Arm::treatment : Arm::control;
      unit.outcomes = noise_root * detail::standard_normal(eng, n);
      if (unit.arm == Arm::treatment)
        unit.outcomes += effect;
      exp.units.push_back(std::move(unit));
    }
    out.push_back(std::move(exp));
  }
  return out;
}

/// Posterior summary of every record, with the prior built from the
/// schema-matching records that precede it in time.
inline std::vector<PosteriorSummary> temporal_posteriors(const RecordList &records,
                                                         ShrinkageLevel k, double level = 0.95,
                                                         unsigned threads = 1) {
  std::vector<PosteriorSummary> out(records.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto &r = records[i];
      const auto history = history_of(records, r.timestamp, r.schema);
      const auto prior = build_prior(history, k);
      out[i] = summarize(posterior_update(prior, r.x, r.sigma), k, level);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, records.size()));
  if (workers == 1) {
    work(0, records.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (records.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk, hi = std::min(records.size(), lo + chunk);
      if (lo < hi)
        pool.emplace_back(work, lo, hi);
    }
  }
  return out;
}

struct SimReport {
  std::vector<ShrinkageLevel> k_values;
  std::vector<std::string> metrics;
  std::size_t n_experiments = 0;
  std::uint64_t seed = 0;
  Generator generator = Generator::hierarchical_synthetic;
  // Indexed [k][metric].
  std::vector<std::vector<double>> mse;
  std::vector<std::vector<double>> coverage;
  std::vector<std::vector<double>> interval_width;
  std::vector<std::vector<double>> significance_rate;
};

/// Scores temporal leave-one-out posteriors against known true effects.
inline SimReport evaluate(const SimConfig &cfg, const RecordList &records,
                          const std::vector<Vector> &truths, unsigned threads = 1) {
  if (records.size() != truths.size())
    throw std::invalid_argument("evaluate: one truth per record required");
  if (records.empty())
    throw std::invalid_argument("evaluate: no experiments");
  SimReport rep;
  rep.k_values = cfg.k_values;
  rep.metrics = records.front().schema.names;
  rep.n_experiments = records.size();
  rep.seed = cfg.seed;
  rep.generator = cfg.generator;
  const auto n = static_cast<std::size_t>(records.front().x.size());
  const double count = static_cast<double>(records.size());
  for (const auto &k : cfg.k_values) {
    const auto posts = temporal_posteriors(records, k, cfg.level, threads);
    std::vector<double> mse(n, 0.0), cover(n, 0.0), width(n, 0.0), sig(n, 0.0);
    for (std::size_t i = 0; i < posts.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const auto &ci = posts[i].intervals[j];
        const double err = posts[i].gaussian.mean[jj] - truths[i][jj];
        mse[j] += err * err;
        cover[j] += (ci.low <= truths[i][jj] && truths[i][jj] <= ci.high) ? 1.0 : 0.0;
        width[j] += ci.high - ci.low;
        sig[j] += ci.significant ? 1.0 : 0.0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      mse[j] /= count;
      cover[j] /= count;
      width[j] /= count;
      sig[j] /= count;
    }
    rep.mse.push_back(std::move(mse));
    rep.coverage.push_back(std::move(cover));
    rep.interval_width.push_back(std::move(width));
    rep.significance_rate.push_back(std::move(sig));
  }
  return rep;
}

/// Runs the configured generator and scores it.
inline SimReport run_simulation(const SimConfig &cfg, unsigned threads = 1) {
  if (auto v = cfg.violations(); !v.empty())
    throw ValidationError(v);
  RecordList records;
  std::vector<Vector> truths;
  if (cfg.generator == Generator::hierarchical_synthetic) {
    for (auto &se : generate_hierarchical(cfg)) {
      records.push_back(std::move(se.record));
      truths.push_back(std::move(se.truth));
    }
  } else {
    records = permutation_null(generate_unit_experiments(cfg), cfg.seed, cfg.bootstrap_replicates);
    truths.assign(records.size(), Vector::Zero(cfg.n_metrics));
  }
  return evaluate(cfg, records, truths, threads);
}

/// Permutation-null scoring of caller-supplied unit-level experiments.
inline SimReport run_simulation(const SimConfig &cfg, std::span<const ExperimentUnits> data,
                                unsigned threads = 1) {
  if (data.size() < 2)
    throw std::invalid_argument("run_simulation needs at least 2 experiments");
  auto records = permutation_null(data, cfg.seed, cfg.bootstrap_replicates);
  const std::vector<Vector> truths(records.size(), Vector::Zero(records.front().x.size()));
  return evaluate(cfg, records, truths, threads);
}

enum class FlipDirection { insignificant_to_significant, significant_to_insignificant };

inline const char *to_string(FlipDirection d) {
  return d == FlipDirection::insignificant_to_significant ? "insignificant_to_significant"
                                                          : "significant_to_insignificant";
}

struct Flip {
  std::string experiment;
  std::optional<std::string> treatment_label;
  std::size_t metric = 0;
  std::string metric_name;
  FlipDirection direction = FlipDirection::insignificant_to_significant;
  PosteriorSummary under_a;
  PosteriorSummary under_b;
};

/// Every (experiment, metric) whose significance differs between k_a and
/// k_b. Direction reads from k_a to k_b.
inline std::vector<Flip> flip_report(const RecordList &records, ShrinkageLevel k_a,
                                     ShrinkageLevel k_b, double level = 0.95) {
  std::vector<Flip> flips;
  if (k_a == k_b)
    return flips;
  const auto a = temporal_posteriors(records, k_a, level);
  const auto b = temporal_posteriors(records, k_b, level);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < a[i].intervals.size(); ++j) {
      const bool sa = a[i].intervals[j].significant, sb = b[i].intervals[j].significant;
      if (sa == sb)
        continue;
      flips.push_back(Flip{records[i].id, records[i].treatment_label, j,
                           records[i].schema.names[j],
                           sb ? FlipDirection::insignificant_to_significant
                              : FlipDirection::significant_to_insignificant,
                           a[i], b[i]});
    }
  }
  return flips;
}

} // namespace bayesdecide
