#include "bayesdecide/io.hpp"
#include "bayesdecide/registry.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <filesystem>
#include <thread>
#include <fstream>
#include <random>
#include <sstream>

using namespace bayesdecide;

namespace {

ExperimentRecord make_record(std::string id, std::int64_t t, Vector x, Matrix sigma,
                             std::vector<std::string> names = {"M1", "M2"}) {
  ExperimentRecord r;
  r.id = std::move(id);
  r.timestamp = t;
  r.schema.names = std::move(names);
  r.x = std::move(x);
  r.sigma = std::move(sigma);
  return r;
}

ExperimentRecord simple(std::string id, std::int64_t t) {
  return make_record(std::move(id), t, Vector::Zero(2), Matrix::Identity(2, 2));
}

bool mentions(const ValidationResult &v, const std::string &needle) {
  for (const auto &s : v.violations)
    if (s.find(needle) != std::string::npos)
      return true;
  return false;
}

std::filesystem::path temp_file(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("bayesdecide_" + name);
  std::filesystem::remove(p);
  return p;
}

} // namespace

TEST(ValidateRecord, IdentitySigmaIsOk) { EXPECT_TRUE(validate_record(simple("E1", 1)).ok()); }

TEST(ValidateRecord, IndefiniteSigmaIsRejected) {
  Matrix s(2, 2);
  s << 1, 2, 2, 1; // eigenvalues 3 and -1
  auto v = validate_record(make_record("E", 1, Vector::Zero(2), s));
  EXPECT_FALSE(v.ok());
  EXPECT_TRUE(mentions(v, "not PSD"));
}

TEST(ValidateRecord, DimensionMismatch) {
  auto v = validate_record(make_record("E", 1, Vector::Zero(3), Matrix::Identity(2, 2)));
  EXPECT_TRUE(mentions(v, "dimension mismatch"));
}

TEST(ValidateRecord, AsymmetryAndDuplicateId) {
  Matrix s(2, 2);
  s << 1, 0.5, 0.4, 1;
  auto v = validate_record(make_record("E", 1, Vector::Zero(2), s));
  EXPECT_TRUE(mentions(v, "not symmetric"));

  std::set<std::string> ids{"E1"};
  EXPECT_TRUE(mentions(validate_record(simple("E1", 1), &ids), "duplicate id"));
}

TEST(ValidateRecord, SchemaViolations) {
  auto r = make_record("E", 1, Vector::Zero(2), Matrix::Identity(2, 2), {"a", "a"});
  EXPECT_TRUE(mentions(validate_record(r), "duplicate metric"));
  r.schema.names = {"a", ""};
  EXPECT_TRUE(mentions(validate_record(r), "empty metric"));
}

TEST(ValidateRecord, RoundOffNegativeEigenvalueIsTolerated) {
  Matrix s(2, 2);
  s << 1, 1, 1, 1; // singular; nudge below zero by far less than the tolerance
  s(1, 1) -= 1e-13;
  EXPECT_TRUE(validate_record(make_record("E", 1, Vector::Zero(2), s)).ok());
  s(1, 1) -= 1e-6;
  EXPECT_FALSE(validate_record(make_record("E", 1, Vector::Zero(2), s)).ok());
}

// Property: every A A^T is accepted.
TEST(ValidateRecord, AcceptsConstructivePsdMatrices) {
  std::mt19937_64 eng(11);
  std::uniform_int_distribution<int> dim(1, 6), rank(1, 6);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = dim(eng), r = rank(eng);
    Matrix a(n, r);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j)
        a(i, j) = z(eng) * std::pow(10.0, trial % 7 - 3);
    Matrix s = a * a.transpose();
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i)
      names.push_back("m" + std::to_string(i));
    auto rec = make_record("E", 1, Vector::Zero(n), s, names);
    EXPECT_TRUE(validate_record(rec).ok()) << "trial " << trial;
  }
}

// Property: serialize/deserialize is bit-exact for arbitrary doubles.
TEST(RecordJson, RoundTripIsBitExact) {
  std::mt19937_64 eng(5);
  std::uniform_int_distribution<std::uint64_t> bits;
  std::uniform_int_distribution<int> dim(1, 5);
  auto any_double = [&] {
    double d;
    do {
      const auto b = bits(eng);
      std::memcpy(&d, &b, sizeof d);
    } while (!std::isfinite(d));
    return d;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(eng);
    ExperimentRecord r;
    r.id = "rec-" + std::to_string(trial);
    r.timestamp = static_cast<std::int64_t>(bits(eng) >> 2) - (1LL << 60);
    for (int i = 0; i < n; ++i)
      r.schema.names.push_back("metric " + std::to_string(i));
    if (trial % 3 == 0)
      r.schema.units.assign(static_cast<std::size_t>(n), "USD");
    r.x.resize(n);
    r.sigma.resize(n, n);
    for (int i = 0; i < n; ++i) {
      r.x[i] = any_double();
      for (int j = 0; j < n; ++j)
        r.sigma(i, j) = any_double();
    }
    if (trial % 2)
      r.treatment_label = "(A1, B" + std::to_string(trial) + ")";
    r.provenance = trial % 4 ? Provenance::supplied : Provenance::bootstrapped;

    const auto text = io::record_to_json(r).dump();
    const auto back = io::record_from_json(json::parse(text));
    ASSERT_EQ(back, r) << text;
  }
}

TEST(RecordJson, FieldNames) {
  auto j = io::record_to_json(simple("E1", 3));
  for (const char *f : {"id", "timestamp", "metrics", "x", "sigma", "treatment_label", "provenance"})
    EXPECT_TRUE(j.contains(f)) << f;
  EXPECT_EQ(j.size(), 7u);
  EXPECT_TRUE(j["sigma"][0].is_array());
}

TEST(RecordJson, MalformedInputThrowsFormatError) {
  EXPECT_THROW(io::record_from_json(json::parse(R"({"id":"a"})")), FormatError);
  EXPECT_THROW(io::record_from_json(json::parse(
                   R"({"id":"a","timestamp":1,"metrics":["m"],"x":[1],"sigma":[[1],[1,2]]})")),
               FormatError);
}

TEST(Registry, AppendThenList) {
  Registry reg;
  reg.append(simple("E1", 1));
  EXPECT_EQ(reg.list_ids(), std::vector<std::string>{"E1"});
}

TEST(Registry, OrderedByTimestampThenId) {
  Registry reg;
  reg.append(simple("E2", 5));
  reg.append(simple("E1", 3));
  EXPECT_EQ(reg.list_ids(), (std::vector<std::string>{"E1", "E2"}));
  reg.append(simple("D0", 5));
  EXPECT_EQ(reg.list_ids(), (std::vector<std::string>{"E1", "D0", "E2"}));
}

TEST(Registry, DuplicateIdRejected) {
  Registry reg;
  reg.append(simple("E1", 1));
  EXPECT_THROW(reg.append(simple("E1", 2)), DuplicateIdError);
}

TEST(Registry, InvalidRecordRejected) {
  Registry reg;
  Matrix s(2, 2);
  s << 1, 2, 2, 1;
  EXPECT_THROW(reg.append(make_record("bad", 1, Vector::Zero(2), s)), ValidationError);
  EXPECT_TRUE(reg.list_ids().empty());
}

TEST(Registry, HistoryIsStrictlyEarlierAndSchemaMatched) {
  Registry reg;
  EXPECT_TRUE(reg.history(kEndOfTime, MetricSchema{{"M1", "M2"}, {}}).empty());
  for (int t = 1; t <= 3; ++t)
    reg.append(simple("E" + std::to_string(t), t));
  reg.append(make_record("other", 1, Vector::Zero(2), Matrix::Identity(2, 2), {"M2", "M1"}));
  const MetricSchema schema{{"M1", "M2"}, {}};
  auto h = reg.history(3, schema);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].id, "E1");
  EXPECT_EQ(h[1].id, "E2");
  EXPECT_EQ(reg.history(kEndOfTime, schema).size(), 3u);
}

TEST(Registry, PersistsAsJsonLinesAndReloads) {
  const auto path = temp_file("registry.jsonl");
  {
    Registry reg(path);
    auto r = simple("E2", 5);
    r.treatment_label = "(A1, B2)";
    reg.append(r);
    reg.append(simple("E1", 3));
  }
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_NO_THROW(json::parse(line));
    ++lines;
  }
  EXPECT_EQ(lines, 2);

  Registry again(path);
  EXPECT_EQ(again.list_ids(), (std::vector<std::string>{"E1", "E2"}));
  EXPECT_EQ(again.find("E2")->treatment_label, "(A1, B2)");
  EXPECT_THROW(again.append(simple("E1", 9)), DuplicateIdError);
  std::filesystem::remove(path);
}

TEST(Registry, CorruptFileIsAStorageError) {
  const auto path = temp_file("corrupt.jsonl");
  std::ofstream(path) << "{not json\n";
  EXPECT_THROW(Registry{path}, StorageError);
  std::filesystem::remove(path);
}

TEST(Registry, SnapshotsAreImmutable) {
  Registry reg;
  reg.append(simple("E1", 1));
  auto before = reg.snapshot();
  reg.append(simple("E2", 2));
  EXPECT_EQ(before->size(), 1u);
  EXPECT_EQ(reg.snapshot()->size(), 2u);
}

TEST(Registry, ConcurrentReadersDuringWrites) {
  Registry reg;
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::vector<std::jthread> readers;
  for (int r = 0; r < 4; ++r)
    readers.emplace_back([&] {
      while (!done) {
        auto snap = reg.snapshot();
        if (!std::is_sorted(snap->begin(), snap->end(), record_order))
          ++bad;
      }
    });
  for (int i = 0; i < 200; ++i)
    reg.append(simple("E" + std::to_string(i), (i * 7919) % 101));
  done = true;
  readers.clear();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(reg.snapshot()->size(), 200u);
}

TEST(UnitCsv, ParsesHeaderAndRows) {
  std::istringstream in("unit_id,arm,revenue,cx\nu1,treatment,1.5,2\nu2,control,-1,0\n");
  auto t = io::read_units_csv(in);
  EXPECT_EQ(t.schema.names, (std::vector<std::string>{"revenue", "cx"}));
  ASSERT_EQ(t.units.size(), 2u);
  EXPECT_EQ(t.units[0].arm, Arm::treatment);
  EXPECT_DOUBLE_EQ(t.units[1].outcomes[0], -1.0);

  std::ostringstream out;
  io::write_units_csv(out, t);
  std::istringstream again(out.str());
  auto t2 = io::read_units_csv(again);
  EXPECT_EQ(t2.units[0].outcomes, t.units[0].outcomes);
}

TEST(UnitCsv, RejectsBadInput) {
  std::istringstream bad_header("id,arm,m\n");
  EXPECT_THROW(io::read_units_csv(bad_header), FormatError);
  std::istringstream bad_arm("unit_id,arm,m\nu1,placebo,1\n");
  EXPECT_THROW(io::read_units_csv(bad_arm), FormatError);
  std::istringstream non_finite("unit_id,arm,m\nu1,control,nan\n");
  EXPECT_THROW(io::read_units_csv(non_finite), FormatError);
  std::istringstream short_row("unit_id,arm,m,n\nu1,control,1\n");
  EXPECT_THROW(io::read_units_csv(short_row), FormatError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(-2.5), "-2.5");
  std::mt19937_64 eng(3);
  std::normal_distribution<double> z(0, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = z(eng);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
}
