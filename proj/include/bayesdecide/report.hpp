#pragma once

// JSON documents, CSV tables and display tables emitted by the CLI and
// the HTTP service. Both front ends render through these functions so
// their outputs agree byte for byte.

#include "bayesdecide/io.hpp"
#include "bayesdecide/risk.hpp"
#include "bayesdecide/simulation.hpp"

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bayesdecide::report {

/// Canonical text form of a JSON document: 2-space indent, trailing newline.
inline std::string render(const json &j) { return j.dump(2) + "\n"; }

inline json posterior_json(const PosteriorSummary &s, const MetricSchema &schema,
                           const std::string &experiment = {}) {
  json j;
  if (!experiment.empty())
    j["experiment"] = experiment;
  j["k"] = s.k_used.to_json();
  j["level"] = s.level;
  j["metrics"] = schema.names;
  j["mean"] = io::vector_to_json(s.gaussian.mean);
  j["cov"] = io::matrix_to_json(s.gaussian.cov);
  json intervals = json::array();
  for (std::size_t i = 0; i < s.intervals.size(); ++i) {
    const auto &ci = s.intervals[i];
    intervals.push_back({{"metric", i < schema.names.size() ? schema.names[i] : std::to_string(i)},
                         {"estimate", s.gaussian.mean[static_cast<Eigen::Index>(i)]},
                         {"low", ci.low},
                         {"high", ci.high},
                         {"significant", ci.significant}});
  }
  j["intervals"] = std::move(intervals);
  return j;
}

inline json prior_json(const Prior &prior, ShrinkageLevel k, const MetricSchema &schema,
                       std::int64_t before) {
  json j;
  j["k"] = k.to_json();
  j["before"] = before;
  j["metrics"] = schema.names;
  if (const auto *h = std::get_if<HierarchicalPrior>(&prior)) {
    j["flat"] = false;
    j["history_count"] = h->params.history_count;
    j["mean"] = io::vector_to_json(h->gaussian.mean);
    j["cov"] = io::matrix_to_json(h->gaussian.cov);
    j["sd_correlation"] = io::matrix_to_json(sd_correlation_matrix(h->gaussian.cov));
    j["theta_hat"] = io::matrix_to_json(h->params.theta_hat);
    j["gamma"] = io::matrix_to_json(h->params.gamma);
    j["nu"] = io::vector_to_json(h->params.nu);
    j["precision"] = io::matrix_to_json(h->params.H);
  } else {
    j["flat"] = true;
    j["notice"] = "flat prior: posterior equals the likelihood";
  }
  return j;
}

/// Prior means, then sds on the diagonal and correlations off it.
inline std::string prior_table(const Prior &prior, ShrinkageLevel k, const MetricSchema &schema) {
  std::ostringstream os;
  os << "prior, k = " << k.to_string() << "\n";
  const auto *h = std::get_if<HierarchicalPrior>(&prior);
  if (!h) {
    os << "flat prior: posterior equals the likelihood\n";
    return os.str();
  }
  os << "history experiments: " << h->params.history_count << "\n\nmetric\tmean\n";
  for (std::size_t i = 0; i < schema.size(); ++i)
    os << schema.names[i] << '\t' << io::format_sig(h->gaussian.mean[static_cast<Eigen::Index>(i)])
       << '\n';
  const Matrix t = sd_correlation_matrix(h->gaussian.cov);
  os << "\n(diagonal: sd, off-diagonal: correlation)\n";
  for (const auto &n : schema.names)
    os << '\t' << n;
  os << '\n';
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    os << schema.names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      os << '\t' << io::format_sig(t(r, c));
    os << '\n';
  }
  return os.str();
}

inline json compare_json(const std::vector<PosteriorSummary> &rows, const MetricSchema &schema,
                         const std::string &experiment) {
  json j;
  j["experiment"] = experiment;
  j["posteriors"] = json::array();
  for (const auto &s : rows)
    j["posteriors"].push_back(posterior_json(s, schema));
  return j;
}

/// Side-by-side estimates and intervals per k, one row per metric.
inline std::string compare_csv(const std::vector<PosteriorSummary> &rows,
                               const MetricSchema &schema) {
  std::ostringstream os;
  os << "metric";
  for (const auto &s : rows) {
    const auto k = s.k_used.to_string();
    os << ",est_k" << k << ",low_k" << k << ",high_k" << k;
  }
  os << '\n';
  for (std::size_t m = 0; m < schema.size(); ++m) {
    os << schema.names[m];
    for (const auto &s : rows)
      os << ',' << io::format_double(s.gaussian.mean[static_cast<Eigen::Index>(m)]) << ','
         << io::format_double(s.intervals[m].low) << ',' << io::format_double(s.intervals[m].high);
    os << '\n';
  }
  return os.str();
}

inline std::string compare_table(const std::vector<PosteriorSummary> &rows,
                                 const MetricSchema &schema) {
  std::ostringstream os;
  os << "metric";
  for (const auto &s : rows)
    os << "\tk=" << s.k_used.to_string() << " EST\tCIL\tCIR";
  os << '\n';
  for (std::size_t m = 0; m < schema.size(); ++m) {
    os << schema.names[m];
    for (const auto &s : rows)
      os << '\t' << io::format_sig(s.gaussian.mean[static_cast<Eigen::Index>(m)]) << '\t'
         << io::format_sig(s.intervals[m].low) << '\t' << io::format_sig(s.intervals[m].high);
    os << '\n';
  }
  return os.str();
}

inline json decision_json(const DecisionReport &r, const MetricSchema &schema,
                          const std::string &experiment, const LossSpec &loss,
                          std::optional<std::uint64_t> seed) {
  json j;
  j["experiment"] = experiment;
  j["tradeoffs"] = io::vector_to_json(loss.tradeoffs);
  j["c0"] = loss.c0;
  j["c1"] = loss.c1;
  j["weights"] = io::vector_to_json(r.weights);
  j["risk_launch"] = r.risk_launch;
  j["risk_rollback"] = r.risk_rollback;
  j["recommendation"] = to_string(r.recommendation);
  if (r.se_launch)
    j["se_launch"] = *r.se_launch;
  if (r.se_rollback)
    j["se_rollback"] = *r.se_rollback;
  if (r.mc_samples)
    j["mc_samples"] = *r.mc_samples;
  if (r.joint_success)
    j["joint_success"] = {{"probability", r.joint_success->value},
                          {"standard_error", r.joint_success->standard_error},
                          {"samples", r.joint_success->samples}};
  if (seed)
    j["seed"] = *seed;
  j["posterior"] = posterior_json(r.posterior, schema);
  return j;
}

inline const char *kGridCsvHeader = "lambda1,lambda2,risk_launch,decision";

inline std::string grid_csv(const DecisionSpace &space) {
  std::ostringstream os;
  os << kGridCsvHeader << '\n';
  for (const auto &p : space.points)
    os << io::format_double(p.lambda1) << ',' << io::format_double(p.lambda2) << ','
       << io::format_double(p.risk_launch) << ',' << to_string(p.decision) << '\n';
  return os.str();
}

inline json grid_json(const DecisionSpace &space, const MetricSchema &schema) {
  json j;
  j["axis1"] = schema.names.at(space.axis1_metric);
  j["axis2"] = schema.names.at(space.axis2_metric);
  json pts = json::array();
  for (const auto &p : space.points)
    pts.push_back({{"lambda1", p.lambda1},
                   {"lambda2", p.lambda2},
                   {"risk_launch", p.risk_launch},
                   {"decision", to_string(p.decision)}});
  j["grid"] = std::move(pts);
  json skipped = json::array();
  for (const auto &[a, b] : space.skipped)
    skipped.push_back({{"lambda1", a}, {"lambda2", b}, {"reason", "all-zero trade-off vector"}});
  j["skipped"] = std::move(skipped);
  return j;
}

inline json sim_json(const SimReport &r) {
  json j;
  j["generator"] = to_string(r.generator);
  j["seed"] = r.seed;
  j["n_experiments"] = r.n_experiments;
  j["metrics"] = r.metrics;
  json ks = json::array();
  for (const auto &k : r.k_values)
    ks.push_back(k.to_json());
  j["k_values"] = ks;
  j["mse"] = r.mse;
  j["coverage"] = r.coverage;
  j["interval_width"] = r.interval_width;
  j["significance_rate"] = r.significance_rate;
  return j;
}

/// One table: metric rows, one column per k.
inline std::string sim_table_csv(const SimReport &r,
                                 const std::vector<std::vector<double>> &values) {
  std::ostringstream os;
  os << "metric";
  for (const auto &k : r.k_values)
    os << ",k=" << k.to_string();
  os << '\n';
  for (std::size_t m = 0; m < r.metrics.size(); ++m) {
    os << r.metrics[m];
    for (std::size_t k = 0; k < r.k_values.size(); ++k)
      os << ',' << io::format_double(values[k][m]);
    os << '\n';
  }
  return os.str();
}

inline const char *kFlipsCsvHeader =
    "experiment,treatment,metric,direction,est_a,cil_a,cir_a,est_b,cil_b,cir_b";

inline std::string flips_csv(const std::vector<Flip> &flips) {
  std::ostringstream os;
  os << kFlipsCsvHeader << '\n';
  for (const auto &f : flips) {
    const auto m = static_cast<Eigen::Index>(f.metric);
    std::string label = f.treatment_label.value_or("");
    if (label.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : label)
        quoted += (c == '"') ? std::string("\"\"") : std::string(1, c);
      label = quoted + "\"";
    }
    os << f.experiment << ',' << label << ',' << f.metric_name << ',' << to_string(f.direction)
       << ',' << io::format_double(f.under_a.gaussian.mean[m]) << ','
       << io::format_double(f.under_a.intervals[f.metric].low) << ','
       << io::format_double(f.under_a.intervals[f.metric].high) << ','
       << io::format_double(f.under_b.gaussian.mean[m]) << ','
       << io::format_double(f.under_b.intervals[f.metric].low) << ','
       << io::format_double(f.under_b.intervals[f.metric].high) << '\n';
  }
  return os.str();
}

} // namespace bayesdecide::report
