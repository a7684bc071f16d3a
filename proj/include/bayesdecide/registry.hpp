#pragma once

#include "bayesdecide/experiment.hpp"
#include "bayesdecide/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace bayesdecide {

class DuplicateIdError : public std::runtime_error {
public:
  explicit DuplicateIdError(const std::string &id)
      : std::runtime_error("duplicate experiment id '" + id + "'") {}
};

class StorageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kEndOfTime = std::numeric_limits<std::int64_t>::max();

/// Records ordered by (timestamp, id).
using RecordList = std::vector<ExperimentRecord>;
using Snapshot = std::shared_ptr<const RecordList>;

inline bool record_order(const ExperimentRecord &a, const ExperimentRecord &b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
}

/// Records strictly earlier than `before` with exactly `schema`'s metrics.
inline RecordList history_of(const RecordList &records, std::int64_t before,
                             const MetricSchema &schema) {
  RecordList out;
  for (const auto &r : records)
    if (r.timestamp < before && r.schema.matches(schema))
      out.push_back(r);
  return out;
}

inline const ExperimentRecord *find_record(const RecordList &records, const std::string &id) {
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const ExperimentRecord &r) { return r.id == id; });
  return it == records.end() ? nullptr : &*it;
}

/// Append-only experiment registry backed by a JSON Lines file (or memory
/// only when constructed without a path).
///
/// Readers take immutable snapshots; a snapshot never changes after it is
/// handed out. Appends are serialized through a writer lock, hit the file
/// first, then publish a new snapshot.
class Registry {
public:
  Registry() : snapshot_(std::make_shared<const RecordList>()) {}

  explicit Registry(std::filesystem::path path) : path_(std::move(path)) {
    auto records = std::make_shared<RecordList>();
    if (std::filesystem::exists(*path_)) {
      std::ifstream in(*path_);
      if (!in)
        throw StorageError("cannot read registry " + path_->string());
      std::string line;
      std::size_t lineno = 0;
      std::set<std::string> ids;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
          continue;
        ExperimentRecord rec;
        try {
          rec = io::record_from_json(json::parse(line));
        } catch (const std::exception &e) {
          throw StorageError(path_->string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        auto v = validate_record(rec, &ids);
        if (!v.ok())
          throw StorageError(path_->string() + ":" + std::to_string(lineno) + ": " +
                             v.violations.front());
        ids.insert(rec.id);
        records->push_back(std::move(rec));
      }
    }
    std::sort(records->begin(), records->end(), record_order);
    snapshot_ = std::move(records);
  }

  Registry(const Registry &) = delete;
  Registry &operator=(const Registry &) = delete;

  const std::optional<std::filesystem::path> &path() const { return path_; }

  Snapshot snapshot() const {
    std::shared_lock lock(snapshot_mutex_);
    return snapshot_;
  }

  /// Throws ValidationError, DuplicateIdError or StorageError.
  void append(const ExperimentRecord &rec) {
    std::lock_guard writer(writer_mutex_);
    auto current = snapshot();
    if (find_record(*current, rec.id))
      throw DuplicateIdError(rec.id);
    auto v = validate_record(rec);
    if (!v.ok())
      throw ValidationError(v.violations);

    if (path_) {
      std::ofstream out(*path_, std::ios::app);
      if (!out)
        throw StorageError("cannot open registry " + path_->string() + " for append");
      out << io::record_to_json(rec).dump() << '\n';
      out.flush();
      if (!out)
        throw StorageError("write to " + path_->string() + " failed");
    }

    auto next = std::make_shared<RecordList>(*current);
    next->insert(std::upper_bound(next->begin(), next->end(), rec, record_order), rec);
    std::unique_lock lock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }

  std::vector<std::string> list_ids() const {
    std::vector<std::string> ids;
    for (const auto &r : *snapshot())
      ids.push_back(r.id);
    return ids;
  }

  RecordList history(std::int64_t before, const MetricSchema &schema) const {
    return history_of(*snapshot(), before, schema);
  }

  std::optional<ExperimentRecord> find(const std::string &id) const {
    auto snap = snapshot();
    if (auto *r = find_record(*snap, id))
      return *r;
    return std::nullopt;
  }

  std::int64_t latest_timestamp() const {
    auto snap = snapshot();
    return snap->empty() ? 0 : snap->back().timestamp;
  }

private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex snapshot_mutex_;
  std::mutex writer_mutex_;
  Snapshot snapshot_;
};

} // namespace bayesdecide
