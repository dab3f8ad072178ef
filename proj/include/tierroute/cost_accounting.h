#pragma once

#include <span>
#include <string>
#include <vector>

#include "tierroute/backends.h"
#include "tierroute/io.h"
#include "tierroute/router.h"

namespace tierroute {

/// Per-tier usage split by answer correctness, plus the prices to apply.
struct UsageDistribution {
  std::vector<double> fractions_correct;  // empty if no correct answers
  std::vector<double> fractions_wrong;    // empty if no wrong answers
  double accuracy = 0.0;                  // p
  std::vector<double> unit_costs;
  double baseline_cost = 0.0;  // largest tier's unit cost

  ordered_json to_json() const;
};

struct CostOptions {
  /// Charge each routed task `classifier_calls` calls at the smallest tier's
  /// unit cost. Off by default: a single-token reply is negligible.
  bool include_classifier_overhead = false;
  int classifier_calls = 1;
};

struct CostReport {
  double x = 0.0;  // average compute of a correct answer
  double y = 0.0;  // average compute of a wrong answer
  double overhead = 0.0;
  double expected_cost = 0.0;  // p*x + (1-p)*y + overhead
  double savings = 0.0;        // (baseline - expected_cost) / baseline
  UsageDistribution inputs;

  ordered_json to_json() const;
  std::string table(const std::vector<std::string>& tier_ids) const;
};

/// Throws Error if a fraction vector is empty, negative or does not sum to
/// 1 within 1e-9, or if p or the costs are out of range.
CostReport compute_report(const UsageDistribution& d, const CostOptions& options = {});

/// Partitions records by pass / not-pass. Every record must carry a verdict.
UsageDistribution distribution_from_routes(std::span<const RouteRecord> records,
                                           const TierSet& tiers);

}  // namespace tierroute
