#pragma once

#include "bayesdecide/linalg.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bayesdecide {

class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string> &violations() const { return violations_; }

private:
  static std::string join(const std::vector<std::string> &v) {
    std::string out = "validation failed";
    for (const auto &s : v)
      out += "; " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

/// Ordered metric identifiers. Two schemas match only when names agree
/// element-for-element; units are descriptive and do not take part.
struct MetricSchema {
  std::vector<std::string> names;
  std::vector<std::string> units;

  std::size_t size() const { return names.size(); }

  bool matches(const MetricSchema &other) const { return names == other.names; }

  std::optional<std::size_t> index_of(const std::string &name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name)
        return i;
    return std::nullopt;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (names.empty())
      out.emplace_back("schema has no metrics");
    std::set<std::string> seen;
    for (const auto &n : names) {
      if (n.empty())
        out.emplace_back("empty metric name");
      else if (!seen.insert(n).second)
        out.push_back("duplicate metric name '" + n + "'");
    }
    if (!units.empty() && units.size() != names.size())
      out.emplace_back("units length differs from metric count");
    return out;
  }

  bool operator==(const MetricSchema &) const = default;
};

enum class Provenance { supplied, bootstrapped };

inline const char *to_string(Provenance p) {
  return p == Provenance::supplied ? "supplied" : "bootstrapped";
}

inline Provenance provenance_from_string(const std::string &s) {
  if (s == "supplied")
    return Provenance::supplied;
  if (s == "bootstrapped")
    return Provenance::bootstrapped;
  throw std::invalid_argument("unknown provenance '" + s + "'");
}

struct ExperimentRecord {
  std::string id;
  std::int64_t timestamp = 0;
  MetricSchema schema;
  Vector x;
  Matrix sigma;
  std::optional<std::string> treatment_label;
  Provenance provenance = Provenance::supplied;

  bool operator==(const ExperimentRecord &o) const {
    return id == o.id && timestamp == o.timestamp && schema == o.schema &&
           x.size() == o.x.size() && x == o.x && sigma.rows() == o.sigma.rows() &&
           sigma.cols() == o.sigma.cols() && sigma == o.sigma &&
           treatment_label == o.treatment_label && provenance == o.provenance;
  }
};

/// Multivariate normal N(mean, cov).
struct Gaussian {
  Vector mean;
  Matrix cov;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

enum class Arm { treatment, control };

inline const char *to_string(Arm a) { return a == Arm::treatment ? "treatment" : "control"; }

struct UnitOutcomes {
  std::string unit_id;
  Arm arm = Arm::control;
  Vector outcomes;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

inline std::vector<std::string> covariance_violations(const Matrix &sigma) {
  std::vector<std::string> out;
  if (!linalg::is_square(sigma)) {
    out.emplace_back("sigma is not square");
    return out;
  }
  if (!sigma.allFinite()) {
    out.emplace_back("sigma has non-finite entries");
    return out;
  }
  if (!linalg::is_symmetric(sigma))
    out.emplace_back("sigma is not symmetric");
  else if (!linalg::is_psd(sigma))
    out.emplace_back("sigma is not PSD (min eigenvalue " +
                     std::to_string(linalg::min_eigenvalue(sigma)) + ")");
  return out;
}

/// Checks shape, symmetry, PSD-ness and (when `known_ids` is given) id
/// uniqueness. Violations are returned as data.
inline ValidationResult validate_record(const ExperimentRecord &rec,
                                        const std::set<std::string> *known_ids = nullptr) {
  ValidationResult r;
  auto &v = r.violations;
  if (rec.id.empty())
    v.emplace_back("empty id");
  for (auto &s : rec.schema.violations())
    v.push_back(std::move(s));
  const auto n = static_cast<Eigen::Index>(rec.schema.size());
  if (rec.x.size() != n || rec.sigma.rows() != n || rec.sigma.cols() != n ||
      rec.sigma.rows() != rec.sigma.cols()) {
    v.push_back("dimension mismatch: " + std::to_string(n) + " metrics, x has " +
                std::to_string(rec.x.size()) + ", sigma is " + std::to_string(rec.sigma.rows()) +
                "x" + std::to_string(rec.sigma.cols()));
  }
  if (!rec.x.allFinite())
    v.emplace_back("x has non-finite entries");
  if (linalg::is_square(rec.sigma))
    for (auto &s : covariance_violations(rec.sigma))
      v.push_back(std::move(s));
  if (known_ids && known_ids->count(rec.id))
    v.push_back("duplicate id '" + rec.id + "'");
  return r;
}

} // namespace bayesdecide
