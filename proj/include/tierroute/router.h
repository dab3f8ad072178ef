#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tierroute/backends.h"
#include "tierroute/classifier.h"
#include "tierroute/corpus.h"
#include "tierroute/labeling.h"
#include "tierroute/verifier.h"

namespace tierroute {

/// Level -> tier. Construction checks totality over the scheme, so dispatch
/// never meets an unmapped level.
class RoutingPolicy {
 public:
  /// Throws ConfigError listing every unmapped level and unknown tier.
  RoutingPolicy(std::map<int, std::string> targets, LevelScheme scheme, const TierSet& tiers);

  /// five_level: 1,2 -> tier 1; 3,4 -> tier 2; 5 -> tier 3.
  /// single_trial: 0 -> tier 1; 1 -> tier 2; 2 -> tier 3. Needs K = 3.
  static RoutingPolicy default_for(const LevelScheme& scheme, const TierSet& tiers);
  /// {"1": "small", ...}
  static RoutingPolicy from_json(const json& j, const LevelScheme& scheme, const TierSet& tiers);

  const std::string& tier_for(int level) const;
  const LevelScheme& scheme() const { return scheme_; }
  ordered_json to_json() const;

 private:
  std::map<int, std::string> targets_;
  LevelScheme scheme_;
};

struct RouteRecord {
  std::string task_id;
  int predicted_level = 0;
  std::string tier_id;
  std::optional<Verdict> verdict;
  double cost_units = 0.0;
  double latency_ms = 0.0;

  ordered_json to_json() const;
  static RouteRecord from_json(const json& j);
};

struct RouteOptions {
  double temperature = 1.0;
  int max_tokens = 1024;
  int verify_timeout_ms = kDefaultVerifyTimeoutMs;
  std::size_t concurrency = 4;
};

/// Classify, pick the tier, query it once, verify. No escalation: a failed
/// answer stands. `verifier` may be null, in which case no verdict is kept.
RouteRecord route(const Task& task, const RoutingPolicy& policy, ClassifierAdapter& classifier,
                  const TierClients& clients, const TierSet& tiers, Verifier* verifier,
                  const RouteOptions& options);

struct RouteFailure {
  std::string task_id;
  std::string stage;  // classify | complete
  std::string message;
};

struct RouteSummary {
  std::size_t n = 0;  // routed records
  std::vector<std::string> tier_ids;
  std::vector<std::size_t> correct_per_tier;
  std::vector<std::size_t> wrong_per_tier;
  std::vector<std::size_t> unverified_per_tier;
  /// Empty when the partition is empty.
  std::vector<double> fractions_correct;
  std::vector<double> fractions_wrong;
  double correctness_rate = 0.0;  // passes / verified records
  std::vector<RouteFailure> failures;

  ordered_json to_json() const;
};

RouteSummary summarize(std::span<const RouteRecord> records, const TierSet& tiers,
                       std::vector<RouteFailure> failures = {});

struct RouteBatchResult {
  std::vector<RouteRecord> records;  // corpus order
  RouteSummary summary;
};

/// Routes every task concurrently. Per-task failures land in the summary and
/// do not abort the batch.
RouteBatchResult route_batch(const Corpus& corpus, const RoutingPolicy& policy,
                             ClassifierAdapter& classifier, const TierClients& clients,
                             const TierSet& tiers, Verifier* verifier, const RouteOptions& options);

}  // namespace tierroute
