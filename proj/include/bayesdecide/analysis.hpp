#pragma once

// Registry-level workflows shared by the CLI and the HTTP service: look up
// an experiment, build its prior from strictly earlier experiments, and run
// the posterior / decision / decision-space computations on it.

#include "bayesdecide/registry.hpp"
#include "bayesdecide/report.hpp"
#include "bayesdecide/risk.hpp"
#include "bayesdecide/simulation.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayesdecide {

class NotFoundError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentPosterior {
  ExperimentRecord record;
  Prior prior;
  PosteriorSummary summary;
};

inline ExperimentPosterior posterior_for(const RecordList &records, const std::string &id,
                                         ShrinkageLevel k, double level = 0.95) {
  const auto *rec = find_record(records, id);
  if (!rec)
    throw NotFoundError("unknown experiment '" + id + "'");
  const auto history = history_of(records, rec->timestamp, rec->schema);
  ExperimentPosterior out{*rec, build_prior(history, k), {}};
  out.summary = summarize(posterior_update(out.prior, rec->x, rec->sigma), k, level);
  return out;
}

/// Resolves a metric given by name or by 0-based index.
inline std::size_t resolve_metric(const MetricSchema &schema, const std::string &token) {
  if (auto i = schema.index_of(token))
    return *i;
  try {
    std::size_t pos = 0;
    const long v = std::stol(token, &pos);
    if (pos == token.size() && v >= 0 && static_cast<std::size_t>(v) < schema.size())
      return static_cast<std::size_t>(v);
  } catch (const std::exception &) {
  }
  throw std::invalid_argument("unknown metric '" + token + "'");
}

/// Parses "<metric>:<v1>,<v2>,...".
inline GridAxis parse_axis(const MetricSchema &schema, const std::string &spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
    throw std::invalid_argument("axis must look like <metric>:<v1>,<v2>,...");
  GridAxis axis;
  axis.metric = resolve_metric(schema, spec.substr(0, colon));
  axis.values = io::parse_double_list(spec.substr(colon + 1));
  return axis;
}

inline constexpr std::uint64_t kDefaultJointSamples = 20000;

/// Linear-loss decision plus the joint probability that every included
/// metric moves in its valued direction.
inline DecisionReport decide_for(const ExperimentPosterior &ep, const LossSpec &loss,
                                 std::uint64_t seed,
                                 std::uint64_t joint_samples = kDefaultJointSamples) {
  if (loss.tradeoffs.size() != ep.record.x.size())
    throw ValidationError({"expected " + std::to_string(ep.record.x.size()) + " trade-offs, got " +
                           std::to_string(loss.tradeoffs.size())});
  auto rep = expected_risks(ep.summary, loss, MonteCarloOptions{joint_samples, seed});
  rep.joint_success =
      joint_success_probability(ep.summary.gaussian, success_directions(loss.tradeoffs),
                                Vector::Zero(loss.tradeoffs.size()), joint_samples, seed);
  return rep;
}

/// Upper bound on decision-space grid size.
inline constexpr std::size_t kMaxGridPoints = 250000;

inline SimConfig sim_config_from_json(const json &j) {
  SimConfig c;
  if (!j.is_object())
    throw FormatError("simulation config must be a JSON object");
  try {
    c.n_experiments = j.value("n_experiments", c.n_experiments);
    c.n_metrics = j.value("n_metrics", c.n_metrics);
    c.seed = j.value("seed", c.seed);
    c.level = j.value("level", c.level);
    if (j.contains("generator")) {
      const auto g = j["generator"].get<std::string>();
      if (g == "permutation_null")
        c.generator = Generator::permutation_null;
      else if (g == "hierarchical_synthetic")
        c.generator = Generator::hierarchical_synthetic;
      else
        throw FormatError("unknown generator '" + g + "'");
    }
    if (j.contains("k_values")) {
      c.k_values.clear();
      for (const auto &k : j["k_values"])
        c.k_values.push_back(k.is_string() ? ShrinkageLevel::parse(k.get<std::string>())
                                           : ShrinkageLevel(k.get<double>()));
    }
    c.mu_sd = j.value("mu_sd", c.mu_sd);
    c.gamma_sd = j.value("gamma_sd", c.gamma_sd);
    c.sigma_scale = j.value("sigma_scale", c.sigma_scale);
    c.correlation = j.value("correlation", c.correlation);
    c.units_per_arm = j.value("units_per_arm", c.units_per_arm);
    c.bootstrap_replicates = j.value("bootstrap_replicates", c.bootstrap_replicates);
    c.effect_sd = j.value("effect_sd", c.effect_sd);
    if (j.contains("metric_scales"))
      c.metric_scales = j["metric_scales"].get<std::vector<double>>();
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad simulation config: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw FormatError(std::string("bad simulation config: ") + e.what());
  }
  if (auto v = c.violations(); !v.empty())
    throw ValidationError(v);
  return c;
}

} // namespace bayesdecide
