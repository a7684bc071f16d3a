#pragma once

// Wire formats: JSON for records (one per line in the registry file) and
// CSV for unit-level outcomes and plot-ready grids.

#include "bayesdecide/experiment.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bayesdecide {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace io {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Display rounding used by human-readable tables.
inline std::string format_sig(double v, int digits = 4) {
  if (!std::isfinite(v))
    return format_double(v);
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s == "inf" || s == "+inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  for (const auto &tok : split(s, ','))
    out.push_back(parse_double(tok));
  return out;
}

inline json vector_to_json(const Vector &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

inline json matrix_to_json(const Matrix &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector_from_json(const json &j) {
  if (!j.is_array())
    throw FormatError("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw FormatError("expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const json &j) {
  if (!j.is_array())
    throw FormatError("expected a nested numeric array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto &row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw FormatError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto &e = row[static_cast<std::size_t>(c)];
      if (!e.is_number())
        throw FormatError("expected a nested numeric array");
      m(r, c) = e.get<double>();
    }
  }
  return m;
}

/// Metrics serialize as plain names; a metric with a unit becomes
/// {"name": ..., "unit": ...} so the schema round-trips exactly.
inline json schema_to_json(const MetricSchema &s) {
  json a = json::array();
  for (std::size_t i = 0; i < s.names.size(); ++i) {
    const bool has_unit = i < s.units.size() && !s.units[i].empty();
    if (has_unit)
      a.push_back({{"name", s.names[i]}, {"unit", s.units[i]}});
    else
      a.push_back(s.names[i]);
  }
  return a;
}

inline MetricSchema schema_from_json(const json &j) {
  if (!j.is_array())
    throw FormatError("metrics must be an array");
  MetricSchema s;
  bool any_unit = false;
  std::vector<std::string> units;
  for (const auto &m : j) {
    if (m.is_string()) {
      s.names.push_back(m.get<std::string>());
      units.emplace_back();
    } else if (m.is_object() && m.contains("name")) {
      s.names.push_back(m.at("name").get<std::string>());
      units.push_back(m.value("unit", std::string{}));
      any_unit = any_unit || !units.back().empty();
    } else {
      throw FormatError("metric entries must be names or {name, unit} objects");
    }
  }
  if (any_unit)
    s.units = std::move(units);
  return s;
}

inline json record_to_json(const ExperimentRecord &r) {
  json j;
  j["id"] = r.id;
  j["timestamp"] = r.timestamp;
  j["metrics"] = schema_to_json(r.schema);
  j["x"] = vector_to_json(r.x);
  j["sigma"] = matrix_to_json(r.sigma);
  j["treatment_label"] = r.treatment_label ? json(*r.treatment_label) : json(nullptr);
  j["provenance"] = to_string(r.provenance);
  return j;
}

inline ExperimentRecord record_from_json(const json &j) {
  if (!j.is_object())
    throw FormatError("record must be a JSON object");
  try {
    ExperimentRecord r;
    r.id = j.at("id").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    r.schema = schema_from_json(j.at("metrics"));
    r.x = vector_from_json(j.at("x"));
    r.sigma = matrix_from_json(j.at("sigma"));
    if (j.contains("treatment_label") && !j["treatment_label"].is_null())
      r.treatment_label = j["treatment_label"].get<std::string>();
    if (j.contains("provenance"))
      r.provenance = provenance_from_string(j["provenance"].get<std::string>());
    return r;
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad record: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw FormatError(std::string("bad record: ") + e.what());
  }
}

/// Parsed unit-level CSV: header `unit_id,arm,<metric1>,...,<metricN>`.
struct UnitTable {
  MetricSchema schema;
  std::vector<UnitOutcomes> units;
};

inline UnitTable read_units_csv(std::istream &in) {
  UnitTable t;
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("empty unit CSV");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "unit_id" || header[1] != "arm")
    throw FormatError("unit CSV header must be unit_id,arm,<metric>,...");
  t.schema.names.assign(header.begin() + 2, header.end());
  if (auto v = t.schema.violations(); !v.empty())
    throw FormatError("bad metric header: " + v.front());
  const auto n = static_cast<Eigen::Index>(t.schema.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != n + 2)
      throw FormatError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(n + 2) + " fields");
    UnitOutcomes u;
    u.unit_id = cells[0];
    if (cells[1] == "treatment")
      u.arm = Arm::treatment;
    else if (cells[1] == "control")
      u.arm = Arm::control;
    else
      throw FormatError("line " + std::to_string(lineno) + ": arm must be treatment or control");
    u.outcomes.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      try {
        u.outcomes[i] = parse_double(cells[static_cast<std::size_t>(i + 2)]);
      } catch (const FormatError &) {
        throw FormatError("line " + std::to_string(lineno) + ": bad number");
      }
    }
    if (!u.outcomes.allFinite())
      throw FormatError("line " + std::to_string(lineno) + ": outcomes must be finite");
    t.units.push_back(std::move(u));
  }
  return t;
}

inline UnitTable read_units_csv_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return read_units_csv(in);
}

inline void write_units_csv(std::ostream &out, const UnitTable &t) {
  out << "unit_id,arm";
  for (const auto &n : t.schema.names)
    out << ',' << n;
  out << '\n';
  for (const auto &u : t.units) {
    out << u.unit_id << ',' << to_string(u.arm);
    for (Eigen::Index i = 0; i < u.outcomes.size(); ++i)
      out << ',' << format_double(u.outcomes[i]);
    out << '\n';
  }
}

} // namespace io
} // namespace bayesdecide
