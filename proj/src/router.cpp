#include "tierroute/router.h"

#include <chrono>
#include <mutex>

namespace tierroute {

RoutingPolicy::RoutingPolicy(std::map<int, std::string> targets, LevelScheme scheme,
                             const TierSet& tiers)
    : targets_(std::move(targets)), scheme_(std::move(scheme)) {
  std::vector<std::string> problems;
  for (int l = scheme_.min_level; l <= scheme_.max_level; ++l) {
    auto it = targets_.find(l);
    if (it == targets_.end()) {
      problems.push_back("routing policy has no tier for level " + std::to_string(l));
    } else if (!tiers.find(it->second)) {
      problems.push_back("routing policy sends level " + std::to_string(l) + " to unknown tier " +
                         it->second);
    }
  }
  for (const auto& [level, tier] : targets_) {
    if (!scheme_.contains(level)) {
      problems.push_back("routing policy maps level " + std::to_string(level) + " outside " +
                         scheme_.id);
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

RoutingPolicy RoutingPolicy::default_for(const LevelScheme& scheme, const TierSet& tiers) {
  if (tiers.size() != 3) {
    throw ConfigError({"the default routing policy needs exactly 3 tiers; configure one explicitly"});
  }
  const auto& t1 = tiers.at(0).tier_id;
  const auto& t2 = tiers.at(1).tier_id;
  const auto& t3 = tiers.at(2).tier_id;
  if (scheme.id == "single_trial") return RoutingPolicy({{0, t1}, {1, t2}, {2, t3}}, scheme, tiers);
  return RoutingPolicy({{1, t1}, {2, t1}, {3, t2}, {4, t2}, {5, t3}}, scheme, tiers);
}

RoutingPolicy RoutingPolicy::from_json(const json& j, const LevelScheme& scheme,
                                       const TierSet& tiers) {
  if (!j.is_object()) throw ConfigError({"routing policy must be an object of level -> tier_id"});
  std::map<int, std::string> targets;
  std::vector<std::string> problems;
  for (const auto& [key, value] : j.items()) {
    int level = 0;
    try {
      std::size_t used = 0;
      level = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      problems.push_back("routing policy key '" + key + "' is not a level");
      continue;
    }
    if (!value.is_string()) {
      problems.push_back("routing policy target for level " + key + " must be a tier_id");
      continue;
    }
    targets[level] = value.get<std::string>();
  }
  try {
    RoutingPolicy policy(std::move(targets), scheme, tiers);
    if (problems.empty()) return policy;
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  throw ConfigError(std::move(problems));
}

const std::string& RoutingPolicy::tier_for(int level) const {
  auto it = targets_.find(level);
  if (it == targets_.end()) throw Error("no tier for level " + std::to_string(level));
  return it->second;
}

ordered_json RoutingPolicy::to_json() const {
  ordered_json out = ordered_json::object();
  for (const auto& [level, tier] : targets_) out[std::to_string(level)] = tier;
  return out;
}

ordered_json RouteRecord::to_json() const {
  ordered_json out;
  out["task_id"] = task_id;
  out["predicted_level"] = predicted_level;
  out["tier_id"] = tier_id;
  out["verdict"] = verdict ? verdict->to_json() : ordered_json(nullptr);
  out["cost_units"] = cost_units;
  out["latency_ms"] = latency_ms;
  return out;
}

RouteRecord RouteRecord::from_json(const json& j) {
  RouteRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.predicted_level = j.at("predicted_level").get<int>();
  r.tier_id = j.at("tier_id").get<std::string>();
  if (j.contains("verdict") && !j.at("verdict").is_null()) r.verdict = Verdict::from_json(j.at("verdict"));
  r.cost_units = j.value("cost_units", 0.0);
  r.latency_ms = j.value("latency_ms", 0.0);
  return r;
}

RouteRecord route(const Task& task, const RoutingPolicy& policy, ClassifierAdapter& classifier,
                  const TierClients& clients, const TierSet& tiers, Verifier* verifier,
                  const RouteOptions& options) {
  auto prediction = classifier.predict(task);
  if (!policy.scheme().contains(prediction.predicted_level)) {
    throw ClassificationError("classifier returned level " +
                              std::to_string(prediction.predicted_level) + " outside " +
                              policy.scheme().id);
  }
  const auto& tier_id = policy.tier_for(prediction.predicted_level);
  const auto* tier = tiers.find(tier_id);
  if (!tier) throw Error("routing policy names unknown tier " + tier_id);

  CompletionRequest req{tier_id, task.task_id, 1, render_prompt(task, tier->prompt_profile),
                        options.temperature, options.max_tokens};
  auto resp = clients.complete(req);

  RouteRecord rec;
  rec.task_id = task.task_id;
  rec.predicted_level = prediction.predicted_level;
  rec.tier_id = tier_id;
  rec.cost_units = tier->unit_cost;
  rec.latency_ms = resp.latency_ms;
  if (verifier && !task.assertions.empty()) {
    rec.verdict = verifier->verify(
        {task.task_id, extract_code(resp.text), task.assertions, options.verify_timeout_ms});
  }
  return rec;
}

ordered_json RouteSummary::to_json() const {
  ordered_json out;
  out["n"] = n;
  out["tier_ids"] = tier_ids;
  out["correct_per_tier"] = correct_per_tier;
  out["wrong_per_tier"] = wrong_per_tier;
  out["unverified_per_tier"] = unverified_per_tier;
  out["fractions_correct"] =
      fractions_correct.empty() ? ordered_json(nullptr) : ordered_json(fractions_correct);
  out["fractions_wrong"] =
      fractions_wrong.empty() ? ordered_json(nullptr) : ordered_json(fractions_wrong);
  out["correctness_rate"] = correctness_rate;
  ordered_json fails = ordered_json::array();
  for (const auto& f : failures) {
    fails.push_back({{"task_id", f.task_id}, {"stage", f.stage}, {"message", f.message}});
  }
  out["failures"] = fails;
  return out;
}

namespace {

std::vector<double> normalize(const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> out;
  if (total == 0) return out;
  for (auto c : counts) out.push_back(static_cast<double>(c) / static_cast<double>(total));
  return out;
}

}  // namespace

RouteSummary summarize(std::span<const RouteRecord> records, const TierSet& tiers,
                       std::vector<RouteFailure> failures) {
  RouteSummary s;
  s.n = records.size();
  for (const auto& t : tiers.tiers()) s.tier_ids.push_back(t.tier_id);
  s.correct_per_tier.assign(tiers.size(), 0);
  s.wrong_per_tier.assign(tiers.size(), 0);
  s.unverified_per_tier.assign(tiers.size(), 0);
  for (const auto& r : records) {
    auto k = tiers.position(r.tier_id);
    if (!r.verdict) {
      ++s.unverified_per_tier[k];
    } else if (r.verdict->passed()) {
      ++s.correct_per_tier[k];
    } else {
      ++s.wrong_per_tier[k];
    }
  }
  s.fractions_correct = normalize(s.correct_per_tier);
  s.fractions_wrong = normalize(s.wrong_per_tier);
  std::size_t correct = 0;
  std::size_t verified = 0;
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    correct += s.correct_per_tier[k];
    verified += s.correct_per_tier[k] + s.wrong_per_tier[k];
  }
  s.correctness_rate = verified ? static_cast<double>(correct) / static_cast<double>(verified) : 0.0;
  s.failures = std::move(failures);
  return s;
}

RouteBatchResult route_batch(const Corpus& corpus, const RoutingPolicy& policy,
                             ClassifierAdapter& classifier, const TierClients& clients,
                             const TierSet& tiers, Verifier* verifier,
                             const RouteOptions& options) {
  const auto n = corpus.size();
  std::vector<std::optional<RouteRecord>> slots(n);
  std::vector<std::optional<RouteFailure>> failed(n);
  parallel_for(n, options.concurrency, [&](std::size_t i) {
    const auto& task = corpus.tasks()[i];
    try {
      slots[i] = route(task, policy, classifier, clients, tiers, verifier, options);
    } catch (const ClassificationError& e) {
      failed[i] = RouteFailure{task.task_id, "classify", e.what()};
    } catch (const BackendError& e) {
      failed[i] = RouteFailure{task.task_id, "complete", e.what()};
    }
  });

  RouteBatchResult result;
  std::vector<RouteFailure> failures;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) result.records.push_back(std::move(*slots[i]));
    if (failed[i]) failures.push_back(std::move(*failed[i]));
  }
  result.summary = summarize(result.records, tiers, std::move(failures));
  return result;
}

}  // namespace tierroute
