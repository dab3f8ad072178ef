#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tierroute/io.h"
#include "tierroute/profile.h"

namespace tierroute {

/// One verifiable problem in MBPP row shape.
struct Task {
  std::string task_id;
  std::string prompt;
  std::optional<std::string> reference_code;
  std::vector<std::string> assertions;
  /// "callee(type, type)" derived from the first assertion, when parseable.
  std::optional<std::string> signature_hint;

  friend bool operator==(const Task&, const Task&) = default;
};

class Corpus {
 public:
  static constexpr int kSchemaVersion = 1;

  Corpus() = default;
  /// Throws Error on a duplicate task_id or an invalid task.
  Corpus(std::vector<Task> tasks, std::string source_name);

  const std::vector<Task>& tasks() const { return tasks_; }
  const std::string& source_name() const { return source_name_; }
  int schema_version() const { return kSchemaVersion; }
  std::size_t size() const { return tasks_.size(); }
  bool empty() const { return tasks_.empty(); }

  const Task* find(std::string_view task_id) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::vector<Task> tasks_;
  std::string source_name_;
};

struct IngestDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  Corpus corpus;
  std::vector<IngestDiagnostic> rejected;
};

/// Parses line-delimited records {task_id, text, code, test_list}.
/// Malformed records are skipped and reported. Throws Error when no record
/// survives or when two records share a task_id.
IngestResult ingest(std::string_view source, std::string source_name);

/// Serializes in the same record format `ingest` reads.
std::string save(const Corpus& corpus);

/// Extracts "name(type, ...)" from the first call expression of an assertion.
std::optional<std::string> extract_signature_hint(std::string_view assertion);

struct CleanResult {
  Corpus corpus;
  std::vector<std::string> removed;

  /// {"removed": [...], "reason": "all_zero_profile"}
  ordered_json report() const;
};

/// Drops every task whose profile is zero on all tiers.
/// Throws Error if a task has no profile.
CleanResult clean(const Corpus& corpus, const std::map<std::string, SuccessProfile>& profiles);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Index partition of [0, n). Each side is returned in ascending order.
/// Train size is round(train_fraction * n).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            const SplitSpec& spec);

std::pair<Corpus, Corpus> split(const Corpus& corpus, const SplitSpec& spec);

}  // namespace tierroute
