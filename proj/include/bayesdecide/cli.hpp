#pragma once

// Command-line front end. dispatch() takes argv and output streams so it
// can be driven in-process; tools/bayesdecide.cpp is a thin main().
//
// Exit codes: 0 success, 1 validation / data error, 2 usage error.

#include "bayesdecide/analysis.hpp"
#include "bayesdecide/service.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace bayesdecide::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char *kRegistryEnv = "BAYESDECIDE_REGISTRY";
inline constexpr const char *kPortEnv = "BAYESDECIDE_PORT";

struct CliConfig {
  std::string registry_path = "registry.jsonl";
  std::uint64_t seed = 0;
  std::string output_format; // json | csv | table; empty => command default
  double credible_level = 0.95;
};

namespace detail {

inline std::string format_or(const CliConfig &c, const char *fallback) {
  return c.output_format.empty() ? fallback : c.output_format;
}

/// Picks the metric schema for a prior report: explicit --metrics, else the
/// single schema shared by the candidate records.
inline std::optional<MetricSchema> prior_schema(const RecordList &records, std::int64_t before,
                                                const std::string &metrics) {
  if (!metrics.empty()) {
    MetricSchema s;
    s.names = io::split(metrics, ',');
    if (auto v = s.violations(); !v.empty())
      throw ValidationError(v);
    return s;
  }
  std::optional<MetricSchema> found;
  for (const auto &r : records) {
    if (r.timestamp >= before)
      continue;
    if (found && !found->matches(r.schema))
      throw ValidationError({"registry holds several metric schemas; pass --metrics"});
    if (!found)
      found = MetricSchema{r.schema.names, {}};
  }
  return found;
}

inline std::vector<std::string> posterior_k_tokens() { return {"0", "1", "inf"}; }

} // namespace detail

inline int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Bayesian launch / roll-back decisions with hierarchical priors from past "
               "experiments",
               "bayesdecide"};
  app.require_subcommand(1);
  app.fallthrough(); // global options may follow the subcommand
  CliConfig cfg;
  if (const char *env = std::getenv(kRegistryEnv))
    cfg.registry_path = env;
  app.add_option("--registry", cfg.registry_path,
                 std::string("registry file (JSON Lines); env ") + kRegistryEnv);
  app.add_option("--format", cfg.output_format, "output format")
      ->check(CLI::IsMember({"json", "csv", "table"}));
  app.add_option("--level", cfg.credible_level, "credible level")
      ->check(CLI::Range(0.0, 1.0).description("in (0,1)"));

  // ingest
  auto *ingest = app.add_subcommand("ingest", "add an experiment to the registry");
  std::string units_path, record_path, ingest_id, label;
  std::optional<std::int64_t> ingest_ts;
  int replicates = 1000;
  unsigned threads = 1;
  auto *units_opt = ingest->add_option("--units", units_path, "unit-level CSV to bootstrap");
  auto *record_opt = ingest->add_option("--record", record_path, "ExperimentRecord JSON file");
  units_opt->excludes(record_opt);
  ingest->add_option("--id", ingest_id, "experiment id (default: CSV file stem)");
  ingest->add_option("--timestamp", ingest_ts,
                     "completion time, epoch seconds (default: latest registry timestamp + 1)");
  ingest->add_option("--label", label, "treatment label");
  ingest->add_option("--bootstrap-replicates", replicates, "bootstrap replicates B")
      ->check(CLI::Range(2, 10000000));
  ingest->add_option("--seed", cfg.seed, "bootstrap seed");
  ingest->add_option("--threads", threads, "bootstrap worker threads")->check(CLI::Range(1u, 256u));

  // prior
  auto *prior_cmd = app.add_subcommand("prior", "hierarchical prior from the registry");
  std::int64_t before = kEndOfTime;
  std::string k_token = "1", metrics;
  prior_cmd->add_option("--before", before, "use experiments strictly earlier than this time");
  prior_cmd->add_option("--k", k_token, "shrinkage: 0, 1, inf or a nonnegative number");
  prior_cmd->add_option("--metrics", metrics, "comma-separated metric schema");

  // posterior
  auto *post_cmd = app.add_subcommand("posterior", "posterior for one experiment");
  std::string experiment;
  bool compare_k = false;
  post_cmd->add_option("--experiment", experiment, "experiment id")->required();
  post_cmd->add_option("--k", k_token, "shrinkage: 0, 1, inf or a nonnegative number");
  post_cmd->add_flag("--compare-k", compare_k, "side-by-side k = 0, 1, inf");

  // decide
  auto *decide_cmd = app.add_subcommand("decide", "launch / roll-back recommendation");
  std::string tradeoffs;
  double c0 = 0.0, c1 = 0.0;
  std::uint64_t samples = kDefaultJointSamples;
  decide_cmd->add_option("--experiment", experiment, "experiment id")->required();
  decide_cmd->add_option("--k", k_token, "shrinkage: 0, 1, inf or a nonnegative number");
  decide_cmd->add_option("--tradeoffs", tradeoffs, "comma-separated trade-off vector")->required();
  decide_cmd->add_option("--c0", c0, "roll-back cost");
  decide_cmd->add_option("--c1", c1, "launch cost");
  decide_cmd->add_option("--seed", cfg.seed, "seed for the joint success probability");
  decide_cmd->add_option("--samples", samples, "Monte Carlo draws")
      ->check(CLI::Range(std::uint64_t{1000}, std::uint64_t{100000000}));

  // space
  auto *space_cmd = app.add_subcommand("space", "decision-space grid over two trade-offs");
  std::string axis1, axis2, fixed;
  space_cmd->add_option("--experiment", experiment, "experiment id")->required();
  space_cmd->add_option("--k", k_token, "shrinkage: 0, 1, inf or a nonnegative number");
  space_cmd->add_option("--axis1", axis1, "<metric>:<v1>,<v2>,...")->required();
  space_cmd->add_option("--axis2", axis2, "<metric>:<v1>,<v2>,...")->required();
  space_cmd->add_option("--fixed", fixed, "trade-offs for all metrics (axis entries overridden)");
  space_cmd->add_option("--c0", c0, "roll-back cost");
  space_cmd->add_option("--c1", c1, "launch cost");

  // simulate
  auto *sim_cmd = app.add_subcommand("simulate", "k-sweep simulation study");
  std::string config_path, tables_dir;
  std::optional<std::uint64_t> sim_seed;
  sim_cmd->add_option("--config", config_path, "simulation config JSON")->required();
  sim_cmd->add_option("--tables", tables_dir, "directory for mse/coverage/width CSV tables");
  sim_cmd->add_option("--seed", sim_seed, "overrides the config seed");
  sim_cmd->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));

  // flips
  auto *flips_cmd = app.add_subcommand("flips", "significance changes between two k values");
  std::string ka, kb;
  flips_cmd->add_option("--ka", ka, "first shrinkage level")->required();
  flips_cmd->add_option("--kb", kb, "second shrinkage level")->required();

  // serve
  auto *serve_cmd = app.add_subcommand("serve", "HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1", cors = "*";
  if (const char *env = std::getenv(kPortEnv))
    port = std::atoi(env);
  serve_cmd->add_option("--port", port, std::string("listen port; env ") + kPortEnv);
  serve_cmd->add_option("--host", host, "listen address");
  serve_cmd->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    const auto level = cfg.credible_level;
    if (!(level > 0.0 && level < 1.0))
      throw ValidationError({"--level must be in (0, 1)"});

    if (*ingest) {
      if (units_path.empty() && record_path.empty()) {
        err << "error: ingest needs --units or --record\n\n" << ingest->help();
        return kExitUsage;
      }
      Registry registry(cfg.registry_path);
      ExperimentRecord rec;
      json echo;
      if (!record_path.empty()) {
        std::ifstream in(record_path);
        if (!in)
          throw FormatError("cannot open " + record_path);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::parse_error &e) {
          throw FormatError(std::string("bad JSON in ") + record_path + ": " + e.what());
        }
        rec = io::record_from_json(j);
        if (!ingest_id.empty())
          rec.id = ingest_id;
        if (ingest_ts)
          rec.timestamp = *ingest_ts;
        if (!label.empty())
          rec.treatment_label = label;
      } else {
        const auto table = io::read_units_csv_file(units_path);
        const auto id =
            ingest_id.empty() ? std::filesystem::path(units_path).stem().string() : ingest_id;
        const auto ts = ingest_ts.value_or(registry.latest_timestamp() + 1);
        rec = bootstrap_record(id, ts, table.schema, table.units,
                               BootstrapConfig{replicates, cfg.seed, threads});
        if (!label.empty())
          rec.treatment_label = label;
        echo["seed"] = cfg.seed;
        echo["bootstrap_replicates"] = replicates;
      }
      registry.append(rec);
      echo["ingested"] = io::record_to_json(rec);
      out << report::render(echo);
      return kExitOk;
    }

    Registry registry(cfg.registry_path);
    const auto snap = registry.snapshot();

    if (*prior_cmd) {
      const auto k = ShrinkageLevel::parse(k_token);
      const auto schema = detail::prior_schema(*snap, before, metrics);
      const auto history = schema ? history_of(*snap, before, *schema) : RecordList{};
      const Prior prior = build_prior(history, k);
      const MetricSchema shown = schema.value_or(MetricSchema{});
      const auto fmt = detail::format_or(cfg, "json");
      if (fmt == "table")
        out << report::prior_table(prior, k, shown);
      else if (fmt == "json")
        out << report::render(report::prior_json(prior, k, shown, before));
      else
        throw ValidationError({"prior supports --format json or table"});
      if (is_flat(prior))
        err << "notice: flat prior (" << (history.empty() ? "no matching history" : "k = inf")
            << "); the posterior will equal the likelihood\n";
      return kExitOk;
    }

    if (*post_cmd) {
      const auto fmt = detail::format_or(cfg, "json");
      if (compare_k) {
        std::vector<PosteriorSummary> rows;
        MetricSchema schema;
        for (const auto &tok : detail::posterior_k_tokens()) {
          auto ep = posterior_for(*snap, experiment, ShrinkageLevel::parse(tok), level);
          schema = ep.record.schema;
          rows.push_back(std::move(ep.summary));
        }
        if (fmt == "json")
          out << report::render(report::compare_json(rows, schema, experiment));
        else if (fmt == "csv")
          out << report::compare_csv(rows, schema);
        else
          out << report::compare_table(rows, schema);
        return kExitOk;
      }
      const auto ep = posterior_for(*snap, experiment, ShrinkageLevel::parse(k_token), level);
      if (fmt == "json")
        out << report::render(report::posterior_json(ep.summary, ep.record.schema, ep.record.id));
      else
        out << report::compare_table({ep.summary}, ep.record.schema);
      return kExitOk;
    }

    if (*decide_cmd) {
      const auto ep = posterior_for(*snap, experiment, ShrinkageLevel::parse(k_token), level);
      LossSpec loss;
      const auto values = io::parse_double_list(tradeoffs);
      loss.tradeoffs = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
      loss.c0 = c0;
      loss.c1 = c1;
      const auto rep = decide_for(ep, loss, cfg.seed, samples);
      out << report::render(report::decision_json(rep, ep.record.schema, experiment, loss, cfg.seed));
      return kExitOk;
    }

    if (*space_cmd) {
      const auto k = ShrinkageLevel::parse(k_token);
      const auto ep = posterior_for(*snap, experiment, k, level);
      const auto &schema = ep.record.schema;
      const auto ax1 = parse_axis(schema, axis1), ax2 = parse_axis(schema, axis2);
      if (ax1.values.size() * ax2.values.size() > kMaxGridPoints)
        throw ValidationError({"grid exceeds " + std::to_string(kMaxGridPoints) + " points"});
      Vector fixed_lambda = Vector::Zero(ep.record.x.size());
      if (!fixed.empty()) {
        const auto v = io::parse_double_list(fixed);
        if (static_cast<Eigen::Index>(v.size()) != fixed_lambda.size())
          throw ValidationError({"--fixed needs one value per metric"});
        fixed_lambda = Eigen::Map<const Vector>(v.data(), fixed_lambda.size());
      }
      const auto space = decision_space(ep.summary.gaussian, ax1, ax2, fixed_lambda, c0, c1);
      for (const auto &[a, b] : space.skipped)
        err << "skipped all-zero trade-off vector at (" << io::format_double(a) << ", "
            << io::format_double(b) << ")\n";
      const auto fmt = detail::format_or(cfg, "csv");
      if (fmt == "json") {
        json j = report::grid_json(space, schema);
        j["experiment"] = experiment;
        j["k"] = k.to_json();
        j["posterior"] = report::posterior_json(ep.summary, schema);
        out << report::render(j);
      } else {
        out << report::grid_csv(space);
      }
      return kExitOk;
    }

    if (*sim_cmd) {
      std::ifstream in(config_path);
      if (!in)
        throw FormatError("cannot open " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error &e) {
        throw FormatError(std::string("bad JSON in ") + config_path + ": " + e.what());
      }
      auto sc = sim_config_from_json(j);
      if (sim_seed)
        sc.seed = *sim_seed;
      sc.level = level;
      const auto rep = run_simulation(sc, threads);
      if (!tables_dir.empty()) {
        std::filesystem::create_directories(tables_dir);
        const std::pair<const char *, const std::vector<std::vector<double>> *> tables[] = {
            {"mse.csv", &rep.mse},
            {"coverage.csv", &rep.coverage},
            {"interval_width.csv", &rep.interval_width},
            {"significance_rate.csv", &rep.significance_rate}};
        for (const auto &[name, values] : tables) {
          std::ofstream t(std::filesystem::path(tables_dir) / name);
          t << report::sim_table_csv(rep, *values);
        }
      }
      if (detail::format_or(cfg, "json") == "csv")
        out << report::sim_table_csv(rep, rep.mse);
      else
        out << report::render(report::sim_json(rep));
      return kExitOk;
    }

    if (*flips_cmd) {
      const auto flips = flip_report(*snap, ShrinkageLevel::parse(ka), ShrinkageLevel::parse(kb), level);
      if (detail::format_or(cfg, "csv") == "json") {
        json arr = json::array();
        for (const auto &f : flips) {
          arr.push_back({{"experiment", f.experiment},
                         {"treatment", f.treatment_label ? json(*f.treatment_label) : json(nullptr)},
                         {"metric", f.metric_name},
                         {"direction", to_string(f.direction)},
                         {"under_a", report::posterior_json(f.under_a, {})},
                         {"under_b", report::posterior_json(f.under_b, {})}});
        }
        out << report::render(arr);
      } else {
        out << report::flips_csv(flips);
      }
      return kExitOk;
    }

    if (*serve_cmd) {
      Service service(registry, ServiceOptions{cors, level, cfg.seed});
      httplib::Server server;
      service.attach(server);
      err << "serving " << cfg.registry_path << " on http://" << host << ':' << port << '\n';
      if (!server.listen(host, port)) {
        err << "error: cannot listen on " << host << ':' << port << '\n';
        return kExitValidation;
      }
      return kExitOk;
    }
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

inline int dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i)
    args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

} // namespace bayesdecide::cli
