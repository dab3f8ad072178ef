#pragma once

#include <string>
#include <vector>

#include "tierroute/io.h"

namespace tierroute {

/// Pass counts per tier for one task: counts[k] is the number of passing
/// trials out of `trials` for the tier with index k+1.
struct SuccessProfile {
  std::string task_id;
  std::vector<int> counts;
  int trials = 0;
  /// False when some tier could not be queried M times.
  bool complete = true;

  bool all_zero() const;
  /// Throws Error unless 0 <= counts[k] <= trials for every k.
  void validate(std::size_t tier_count) const;

  ordered_json to_json() const;
  static SuccessProfile from_json(const json& j);

  friend bool operator==(const SuccessProfile&, const SuccessProfile&) = default;
};

}  // namespace tierroute
