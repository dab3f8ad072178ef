#include "tierroute/backends.h"

#include <algorithm>
#include <cmath>
#include <thread>

namespace tierroute {

std::vector<std::string> validate_tiers(const std::vector<ModelTier>& tiers) {
  std::vector<std::string> problems;
  if (tiers.empty()) problems.push_back("tier set is empty");
  std::vector<const ModelTier*> sorted;
  for (const auto& t : tiers) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->tier_index < b->tier_index; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& t = *sorted[i];
    if (t.tier_id.empty()) problems.push_back("tier with index " + std::to_string(t.tier_index) +
                                              " has an empty tier_id");
    if (t.tier_index != static_cast<int>(i) + 1) {
      problems.push_back("tier " + t.tier_id + ": tier_index " + std::to_string(t.tier_index) +
                         " breaks the 1..K sequence (expected " + std::to_string(i + 1) + ")");
    }
    if (!(t.unit_cost >= 0.0)) problems.push_back("tier " + t.tier_id + ": negative unit_cost");
    if (i > 0 && !(t.unit_cost > sorted[i - 1]->unit_cost)) {
      problems.push_back("tier " + t.tier_id + ": unit_cost must exceed that of tier " +
                         sorted[i - 1]->tier_id);
    }
    if (!t.prompt_profile.reduced && t.prompt_profile.system_prompt.empty()) {
      problems.push_back("tier " + t.tier_id + ": empty system_prompt on a full prompt profile");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (sorted[j]->tier_id == t.tier_id) {
        problems.push_back("duplicate tier_id " + t.tier_id);
      }
    }
  }
  return problems;
}

TierSet::TierSet(std::vector<ModelTier> tiers) {
  if (auto problems = validate_tiers(tiers); !problems.empty()) {
    throw ConfigError(std::move(problems));
  }
  std::sort(tiers.begin(), tiers.end(),
            [](const ModelTier& a, const ModelTier& b) { return a.tier_index < b.tier_index; });
  tiers_ = std::move(tiers);
}

const ModelTier* TierSet::find(std::string_view tier_id) const {
  for (const auto& t : tiers_) {
    if (t.tier_id == tier_id) return &t;
  }
  return nullptr;
}

std::size_t TierSet::position(std::string_view tier_id) const {
  for (std::size_t i = 0; i < tiers_.size(); ++i) {
    if (tiers_[i].tier_id == tier_id) return i;
  }
  throw Error("unknown tier " + std::string(tier_id));
}

std::vector<double> TierSet::unit_costs() const {
  std::vector<double> out;
  for (const auto& t : tiers_) out.push_back(t.unit_cost);
  return out;
}

TierSet TierSet::default_three_tier() {
  ModelTier small{"small", 1, 1.0, {}, {}};
  small.prompt_profile.reduced = true;
  ModelTier medium{"medium", 2, 10.0, {}, {}};
  ModelTier large{"large", 3, 100.0, {}, {}};
  return TierSet({small, medium, large});
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt);
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionResponse complete_with_retry(Backend& backend, const CompletionRequest& req,
                                       const RetryPolicy& policy, const Sleeper& sleep) {
  for (int attempt = 0;; ++attempt) {
    try {
      auto resp = backend.complete(req);
      resp.retries = attempt;
      return resp;
    } catch (const BackendError& e) {
      if (!e.retryable()) throw;
      if (attempt >= policy.max_retries) {
        throw BackendError(BackendError::Kind::exhausted,
                           "retry budget exhausted after " + std::to_string(attempt + 1) +
                               " attempts: " + e.what());
      }
      sleep(policy.backoff(attempt));
    }
  }
}

TierClients::TierClients(RetryPolicy policy, Sleeper sleeper)
    : policy_(policy), sleeper_(std::move(sleeper)) {}

void TierClients::add(std::string tier_id, std::shared_ptr<Backend> backend) {
  backends_[std::move(tier_id)] = std::move(backend);
}

bool TierClients::has(std::string_view tier_id) const {
  return backends_.find(tier_id) != backends_.end();
}

CompletionResponse TierClients::complete(const CompletionRequest& req) const {
  if (!(req.temperature >= 0.0)) throw Error("temperature must be >= 0");
  if (req.max_tokens < 1) throw Error("max_tokens must be >= 1");
  auto it = backends_.find(req.tier_id);
  if (it == backends_.end()) throw Error("no backend configured for tier " + req.tier_id);
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  return complete_with_retry(*it->second, req, policy_, sleeper_);
}

std::size_t TierClients::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      const std::shared_ptr<ReplayBackend>& replay) {
  if (config.kind == "replay") {
    if (!replay) throw Error("replay backend requested but no replay store was given");
    return replay;
  }
  if (config.kind == "http") return std::make_shared<HttpChatBackend>(config);
  if (config.kind == "process") return std::make_shared<ProcessBackend>(config);
  throw Error("unknown backend kind '" + config.kind + "'");
}

}  // namespace tierroute
