#include "tierroute/cost_accounting.h"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace tierroute {

namespace {

constexpr double kSumTolerance = 1e-9;

void check_fractions(const std::vector<double>& f, std::size_t tiers, const char* name) {
  if (f.empty()) {
    throw Error(std::string(name) + " is undefined (no records in that partition)");
  }
  if (f.size() != tiers) {
    throw Error(std::string(name) + " has " + std::to_string(f.size()) + " entries for " +
                std::to_string(tiers) + " tiers");
  }
  double sum = 0.0;
  for (double v : f) {
    if (!(v >= 0.0)) throw Error(std::string(name) + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg << name << " sums to " << std::setprecision(12) << sum << ", not 1";
    throw Error(msg.str());
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

ordered_json UsageDistribution::to_json() const {
  ordered_json out;
  out["fractions_correct"] =
      fractions_correct.empty() ? ordered_json(nullptr) : ordered_json(fractions_correct);
  out["fractions_wrong"] =
      fractions_wrong.empty() ? ordered_json(nullptr) : ordered_json(fractions_wrong);
  out["accuracy"] = accuracy;
  out["unit_costs"] = unit_costs;
  out["baseline_cost"] = baseline_cost;
  return out;
}

CostReport compute_report(const UsageDistribution& d, const CostOptions& options) {
  if (d.unit_costs.empty()) throw Error("unit_costs is empty");
  for (std::size_t i = 0; i < d.unit_costs.size(); ++i) {
    if (!(d.unit_costs[i] >= 0.0)) throw Error("unit_costs must be nonnegative");
    if (i > 0 && !(d.unit_costs[i] > d.unit_costs[i - 1])) {
      throw Error("unit_costs must be strictly increasing");
    }
  }
  if (!(d.baseline_cost > 0.0)) throw Error("baseline_cost must be positive");
  if (!(d.accuracy >= 0.0 && d.accuracy <= 1.0)) throw Error("accuracy must lie in [0, 1]");
  check_fractions(d.fractions_correct, d.unit_costs.size(), "fractions_correct");
  check_fractions(d.fractions_wrong, d.unit_costs.size(), "fractions_wrong");

  CostReport r;
  r.inputs = d;
  r.x = dot(d.fractions_correct, d.unit_costs);
  r.y = dot(d.fractions_wrong, d.unit_costs);
  if (options.include_classifier_overhead) {
    r.overhead = options.classifier_calls * d.unit_costs.front();
  }
  r.expected_cost = d.accuracy * r.x + (1.0 - d.accuracy) * r.y + r.overhead;
  r.savings = (d.baseline_cost - r.expected_cost) / d.baseline_cost;
  return r;
}

ordered_json CostReport::to_json() const {
  ordered_json out;
  out["x"] = x;
  out["y"] = y;
  out["overhead"] = overhead;
  out["expected_cost"] = expected_cost;
  out["savings"] = savings;
  out["inputs"] = inputs.to_json();
  return out;
}

std::string CostReport::table(const std::vector<std::string>& tier_ids) const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(12) << "tier" << std::right << std::setw(10) << "cost"
      << std::setw(12) << "correct" << std::setw(12) << "wrong" << "\n";
  for (std::size_t k = 0; k < inputs.unit_costs.size(); ++k) {
    out << std::left << std::setw(12) << (k < tier_ids.size() ? tier_ids[k] : std::to_string(k + 1))
        << std::right << std::setw(10) << inputs.unit_costs[k] << std::setw(12)
        << inputs.fractions_correct[k] << std::setw(12) << inputs.fractions_wrong[k] << "\n";
  }
  out << "accuracy p        " << inputs.accuracy << "\n";
  out << "avg compute x     " << x << "\n";
  out << "avg compute y     " << y << "\n";
  if (overhead > 0.0) out << "classifier cost   " << overhead << "\n";
  out << "expected cost     " << expected_cost << " (baseline " << inputs.baseline_cost << ")\n";
  out << "compute savings   " << savings << "\n";
  return out.str();
}

UsageDistribution distribution_from_routes(std::span<const RouteRecord> records,
                                           const TierSet& tiers) {
  std::vector<std::size_t> correct(tiers.size(), 0);
  std::vector<std::size_t> wrong(tiers.size(), 0);
  for (const auto& r : records) {
    if (!r.verdict) throw Error("route record " + r.task_id + " carries no verdict");
    auto k = tiers.position(r.tier_id);
    ++(r.verdict->passed() ? correct : wrong)[k];
  }
  auto fractions = [](const std::vector<std::size_t>& counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    std::vector<double> out;
    if (total == 0) return out;
    for (auto c : counts) out.push_back(static_cast<double>(c) / static_cast<double>(total));
    return out;
  };
  std::size_t n_correct = 0;
  for (auto c : correct) n_correct += c;

  UsageDistribution d;
  d.fractions_correct = fractions(correct);
  d.fractions_wrong = fractions(wrong);
  d.accuracy = records.empty() ? 0.0
                               : static_cast<double>(n_correct) / static_cast<double>(records.size());
  d.unit_costs = tiers.unit_costs();
  d.baseline_cost = tiers.tiers().empty() ? 0.0 : tiers.tiers().back().unit_cost;
  return d;
}

}  // namespace tierroute
