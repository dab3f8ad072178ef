#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tierroute/backends.h"
#include "tierroute/corpus.h"
#include "tierroute/profile.h"
#include "tierroute/verifier.h"

namespace tierroute {

/// A labeling scheme names the closed range of levels it produces.
struct LevelScheme {
  std::string id;
  int min_level = 1;
  int max_level = 5;

  int level_count() const { return max_level - min_level + 1; }
  bool contains(int level) const { return level >= min_level && level <= max_level; }

  static LevelScheme five_level() { return {"five_level", 1, 5}; }
  static LevelScheme single_trial() { return {"single_trial", 0, 2}; }
  /// Throws Error for ids other than the two above.
  static LevelScheme by_id(std::string_view id);
};

struct ComplexityLabel {
  int level = 0;
  std::string scheme_id;

  friend bool operator==(const ComplexityLabel&, const ComplexityLabel&) = default;
};

/// Boolean expression over a success profile, e.g. "X1 == 5 or X1 + X2 >= 7".
///
/// Grammar: disjunctions ("or" / "||") of conjunctions ("and" / "&&") of
/// comparisons `sum OP int`, where sum is a '+'-joined list of X<k> terms and
/// integer constants, OP is one of == != >= <= > <. The literals "true" and
/// "otherwise" match every profile.
class Condition {
 public:
  static Condition parse(std::string_view text);
  static Condition always();

  bool matches(const std::vector<int>& counts) const;
  bool is_catch_all() const;
  /// Largest X<k> index referenced (0 when none).
  int max_tier_referenced() const;
  const std::string& text() const { return text_; }

 private:
  struct Comparison {
    std::vector<int> tiers;  // 1-based indices, summed
    int constant = 0;        // added to the sum
    enum class Op { eq, ne, ge, le, gt, lt } op = Op::eq;
    int rhs = 0;
  };
  using Conjunction = std::vector<Comparison>;

  std::vector<Conjunction> any_of_;  // empty conjunction == true
  std::string text_;
};

/// First-match ordered mapping from success profiles to levels.
class MappingTable {
 public:
  struct Entry {
    Condition when;
    int level = 0;
  };

  MappingTable() = default;
  explicit MappingTable(std::vector<Entry> entries, std::string scheme_id = "five_level");

  /// The five-level table for M = 5, K = 3:
  ///   1: X1 == 5 or X1 + X2 >= 7
  ///   2: X2 == 5
  ///   3: X3 == 5
  ///   4: X2 >= 2 or X3 >= 2
  ///   5: otherwise
  static MappingTable default_five_trial();

  /// [{"when": "...", "level": n}, ...]
  static MappingTable from_json(const json& j, std::string scheme_id = "five_level");
  ordered_json to_json() const;

  /// Problems preventing use with K tiers and M trials: missing catch-all,
  /// out-of-range tier references or levels.
  std::vector<std::string> validate(std::size_t tier_count, int trials) const;

  /// Level of the first matching entry. Throws Error if nothing matches.
  int level_for(const std::vector<int>& counts) const;

  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& scheme_id() const { return scheme_id_; }

 private:
  std::vector<Entry> entries_;
  std::string scheme_id_ = "five_level";
};

/// Five-level label via `table`. The profile must be complete.
ComplexityLabel label(const SuccessProfile& profile, const MappingTable& table);

/// Three-class label from one trial per tier: index of the first tier that
/// passed, or nullopt (dropped) when none did. Throws Error unless M == 1.
std::optional<ComplexityLabel> label_single_trial(const SuccessProfile& profile);

struct TrialOutcome {
  std::string task_id;
  std::string tier_id;
  int trial_index = 1;
  Verdict verdict;
  std::string raw_output;
  std::string extracted_code;
  int completion_tokens = 0;

  ordered_json to_json() const;
  static TrialOutcome from_json(const json& j);
};

struct IncompletePair {
  std::string task_id;
  std::string tier_id;
  std::string error;
};

struct CollectOptions {
  int trials = 5;
  double temperature = 1.0;
  int max_tokens = 1024;
  /// Concurrent (task, tier) jobs per tier.
  std::size_t concurrency_per_tier = 4;
  int verify_timeout_ms = kDefaultVerifyTimeoutMs;
};

struct CollectionResult {
  /// In corpus order.
  std::vector<SuccessProfile> profiles;
  /// Ordered by corpus position, tier index, trial index.
  std::vector<TrialOutcome> outcomes;
  std::vector<IncompletePair> incomplete;

  std::map<std::string, SuccessProfile> profile_map() const;
};

/// Queries every tier `trials` times per task, verifies each reply and
/// counts passes. A (task, tier) pair whose backend fails permanently marks
/// the profile incomplete.
CollectionResult collect_profiles(const Corpus& corpus, const TierSet& tiers,
                                  const TierClients& clients, Verifier& verifier,
                                  const CollectOptions& options);

/// Recounts passes from an audit log; used to check stored profiles.
std::map<std::string, std::vector<int>> recount(const std::vector<TrialOutcome>& outcomes,
                                                const TierSet& tiers);

/// One line of the labeled dataset.
struct LabeledRecord {
  std::string task_id;
  std::string prompt;
  std::vector<int> counts;
  int trials = 0;
  int level = 0;
  std::string scheme_id;

  ordered_json to_json() const;
  static LabeledRecord from_json(const json& j);

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

struct LabelingResult {
  std::vector<LabeledRecord> records;
  std::vector<std::string> cleaned;     // all-zero profiles
  std::vector<std::string> incomplete;  // excluded, not imputed
};

/// Cleans, excludes incomplete profiles and labels the rest with the scheme
/// named by table.scheme_id() ("single_trial" ignores the table).
LabelingResult label_corpus(const Corpus& corpus,
                            const std::map<std::string, SuccessProfile>& profiles,
                            const MappingTable& table);

std::vector<LabeledRecord> read_labeled(std::string_view text, std::string_view source);

/// Runs fn(i) for i in [0, n) on at most `limit` threads.
void parallel_for(std::size_t n, std::size_t limit, const std::function<void(std::size_t)>& fn);

}  // namespace tierroute
