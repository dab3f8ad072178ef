#include "tierroute/config.h"

#include <algorithm>

namespace tierroute {

namespace {

namespace fs = std::filesystem;

class Checker {
 public:
  std::vector<std::string> problems;

  template <typename T>
  void read(const json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      problems.push_back(where + key + ": wrong type");
    }
  }

  template <typename T>
  bool require(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) {
      problems.push_back(where + key + ": missing");
      return false;
    }
    auto before = problems.size();
    read(j, key, out, where);
    return problems.size() == before;
  }

  fs::path path(const json& j, const char* key, const fs::path& base, const std::string& where,
                bool must_exist) {
    std::string raw;
    read(j, key, raw, where);
    if (raw.empty()) return {};
    fs::path p = fs::path(raw).is_absolute() ? fs::path(raw) : base / raw;
    if (must_exist && !fs::exists(p)) problems.push_back(where + key + ": " + p.string() + " does not exist");
    return p;
  }
};

BackendConfig read_backend(Checker& c, const json& j, const std::string& where) {
  BackendConfig b;
  if (!j.is_object()) {
    c.problems.push_back(where + "backend: must be an object");
    return b;
  }
  c.read(j, "kind", b.kind, where + "backend.");
  c.read(j, "endpoint", b.endpoint, where + "backend.");
  c.read(j, "path", b.path, where + "backend.");
  c.read(j, "model", b.model, where + "backend.");
  c.read(j, "api_key_env", b.api_key_env, where + "backend.");
  c.read(j, "command", b.command, where + "backend.");
  c.read(j, "timeout_ms", b.timeout_ms, where + "backend.");
  if (b.kind != "replay" && b.kind != "http" && b.kind != "process") {
    c.problems.push_back(where + "backend.kind: unknown kind '" + b.kind + "'");
  }
  if (b.kind == "http" && (b.endpoint.empty() || b.model.empty())) {
    c.problems.push_back(where + "backend: http needs endpoint and model");
  }
  if (b.kind == "process" && b.command.empty()) {
    c.problems.push_back(where + "backend: process needs a command");
  }
  return b;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  Checker c;
  RunConfig cfg;
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

  std::vector<ModelTier> tiers;
  if (!j.contains("tiers") || !j.at("tiers").is_array()) {
    c.problems.push_back("tiers: missing or not an array");
  } else {
    for (std::size_t i = 0; i < j.at("tiers").size(); ++i) {
      const auto& t = j.at("tiers")[i];
      const std::string where = "tiers[" + std::to_string(i) + "].";
      ModelTier tier;
      c.require(t, "tier_id", tier.tier_id, where);
      c.require(t, "tier_index", tier.tier_index, where);
      c.require(t, "unit_cost", tier.unit_cost, where);
      if (t.contains("prompt_profile")) {
        const auto& p = t.at("prompt_profile");
        c.read(p, "system_prompt", tier.prompt_profile.system_prompt, where + "prompt_profile.");
        c.read(p, "include_signature", tier.prompt_profile.include_signature, where + "prompt_profile.");
        c.read(p, "reduced", tier.prompt_profile.reduced, where + "prompt_profile.");
      }
      if (t.contains("backend")) tier.backend = read_backend(c, t.at("backend"), where);
      tiers.push_back(std::move(tier));
    }
    for (auto& p : validate_tiers(tiers)) c.problems.push_back("tiers: " + p);
  }

  std::string scheme_id = "five_level";
  c.read(j, "scheme", scheme_id, "");
  try {
    cfg.scheme = LevelScheme::by_id(scheme_id);
  } catch (const Error& e) {
    c.problems.push_back(std::string("scheme: ") + e.what());
  }

  c.read(j, "trials", cfg.trials, "");
  c.read(j, "temperature", cfg.temperature, "");
  c.read(j, "max_tokens", cfg.max_tokens, "");
  c.read(j, "concurrency", cfg.concurrency, "");
  c.read(j, "verify_timeout_ms", cfg.verify_timeout_ms, "");
  if (cfg.trials < 1) c.problems.push_back("trials: must be >= 1");
  if (cfg.scheme.id == "single_trial" && cfg.trials != 1) {
    c.problems.push_back("trials: the single_trial scheme needs trials = 1");
  }
  if (!(cfg.temperature >= 0.0)) c.problems.push_back("temperature: must be >= 0");
  if (cfg.max_tokens < 1) c.problems.push_back("max_tokens: must be >= 1");
  if (cfg.concurrency < 1) c.problems.push_back("concurrency: must be >= 1");
  if (cfg.verify_timeout_ms < 1) c.problems.push_back("verify_timeout_ms: must be >= 1");

  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    int initial = static_cast<int>(cfg.retry.initial_backoff.count());
    int max_b = static_cast<int>(cfg.retry.max_backoff.count());
    c.read(r, "max_retries", cfg.retry.max_retries, "retry.");
    c.read(r, "initial_backoff_ms", initial, "retry.");
    c.read(r, "multiplier", cfg.retry.multiplier, "retry.");
    c.read(r, "max_backoff_ms", max_b, "retry.");
    cfg.retry.initial_backoff = std::chrono::milliseconds(initial);
    cfg.retry.max_backoff = std::chrono::milliseconds(max_b);
    if (cfg.retry.max_retries < 0) c.problems.push_back("retry.max_retries: must be >= 0");
  }

  if (j.contains("mapping")) {
    try {
      cfg.mapping = MappingTable::from_json(j.at("mapping"), cfg.scheme.id);
    } catch (const std::exception& e) {
      c.problems.push_back(std::string("mapping: ") + e.what());
    }
  } else if (cfg.scheme.id == "single_trial") {
    cfg.mapping = MappingTable({{Condition::always(), 0}}, "single_trial");
  }
  if (cfg.scheme.id != "single_trial") {
    for (auto& p : cfg.mapping.validate(tiers.size(), cfg.trials)) c.problems.push_back("mapping: " + p);
  }

  if (j.contains("verifier")) {
    const auto& v = j.at("verifier");
    c.read(v, "kind", cfg.verifier.kind, "verifier.");
    cfg.verifier.table = c.path(v, "table", base_dir, "verifier.", true);
    c.read(v, "command", cfg.verifier.command, "verifier.");
    c.read(v, "pool_size", cfg.verifier.pool_size, "verifier.");
    c.read(v, "grace_ms", cfg.verifier.grace_ms, "verifier.");
    if (cfg.verifier.kind == "stub" && cfg.verifier.table.empty()) {
      c.problems.push_back("verifier.table: required for the stub verifier");
    } else if (cfg.verifier.kind == "process" && cfg.verifier.command.empty()) {
      c.problems.push_back("verifier.command: required for the process verifier");
    } else if (cfg.verifier.kind != "stub" && cfg.verifier.kind != "process") {
      c.problems.push_back("verifier.kind: unknown kind '" + cfg.verifier.kind + "'");
    }
  }

  if (j.contains("classifier")) {
    const auto& k = j.at("classifier");
    c.read(k, "kind", cfg.classifier.kind, "classifier.");
    cfg.classifier.predictions = c.path(k, "predictions", base_dir, "classifier.", true);
    c.read(k, "tier_id", cfg.classifier.tier_id, "classifier.");
    c.read(k, "instruction", cfg.classifier.instruction, "classifier.");
    c.read(k, "temperature", cfg.classifier.temperature, "classifier.");
    if (k.contains("backend")) cfg.classifier.backend = read_backend(c, k.at("backend"), "classifier.");
    if (cfg.classifier.kind != "prompt" && cfg.classifier.kind != "replay") {
      c.problems.push_back("classifier.kind: unknown kind '" + cfg.classifier.kind + "'");
    }
  }

  if (auto p = c.path(j, "replay_store", base_dir, "", true); !p.empty()) cfg.replay_store = p;

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    cfg.paths.corpus = c.path(p, "corpus", base_dir, "paths.", true);
    cfg.paths.profiles = c.path(p, "profiles", base_dir, "paths.", false);
    cfg.paths.labeled = c.path(p, "labeled", base_dir, "paths.", false);
    if (auto out = c.path(p, "out_dir", base_dir, "paths.", false); !out.empty()) {
      cfg.paths.out_dir = out;
    }
  }

  if (c.problems.empty()) {
    cfg.tiers = TierSet(tiers);
    try {
      if (j.contains("policy")) {
        cfg.policy = RoutingPolicy::from_json(j.at("policy"), cfg.scheme, cfg.tiers);
      } else {
        cfg.policy = RoutingPolicy::default_for(cfg.scheme, cfg.tiers);
      }
    } catch (const ConfigError& e) {
      for (const auto& p : e.problems()) c.problems.push_back("policy: " + p);
    }
  } else if (j.contains("policy") && j.at("policy").is_object()) {
    // The tier list is broken, so check the policy by name only.
    for (int l = cfg.scheme.min_level; l <= cfg.scheme.max_level; ++l) {
      const auto& pol = j.at("policy");
      auto it = pol.find(std::to_string(l));
      if (it == pol.end()) {
        c.problems.push_back("policy: routing policy has no tier for level " + std::to_string(l));
      } else if (!it->is_string() ||
                 std::none_of(tiers.begin(), tiers.end(), [&](const ModelTier& t) {
                   return t.tier_id == it->get<std::string>();
                 })) {
        c.problems.push_back("policy: level " + std::to_string(l) + " targets an unknown tier");
      }
    }
  }

  if (!c.problems.empty()) throw ConfigError(std::move(c.problems));
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::shared_ptr<ReplayBackend> open_replay(const RunConfig& config) {
  if (!config.replay_store) return nullptr;
  return ReplayBackend::from_file(*config.replay_store);
}

std::shared_ptr<TierClients> make_clients(const RunConfig& config,
                                          const std::shared_ptr<ReplayBackend>& replay) {
  auto clients = std::make_shared<TierClients>(config.retry);
  for (const auto& t : config.tiers.tiers()) {
    clients->add(t.tier_id, make_backend(t.backend, replay));
  }
  return clients;
}

std::unique_ptr<Verifier> make_verifier(const RunConfig& config) {
  if (config.verifier.kind == "process") {
    RunnerOptions opts;
    opts.command = config.verifier.command;
    opts.grace = std::chrono::milliseconds(config.verifier.grace_ms);
    auto size = config.verifier.pool_size ? config.verifier.pool_size : config.concurrency;
    return std::make_unique<RunnerPool>(std::move(opts), size);
  }
  if (config.verifier.table.empty()) throw Error("no verifier configured");
  return std::make_unique<StubVerifier>(
      StubVerifier::from_jsonl(read_file(config.verifier.table), config.verifier.table.string()));
}

std::unique_ptr<ClassifierAdapter> make_classifier(const RunConfig& config,
                                                   const std::shared_ptr<ReplayBackend>& replay) {
  if (config.classifier.kind == "prompt") {
    auto clients = std::make_shared<TierClients>(config.retry);
    clients->add(config.classifier.tier_id, make_backend(config.classifier.backend, replay));
    PromptClassifier::Options opts{config.classifier.tier_id, config.classifier.instruction,
                                   config.classifier.temperature};
    return std::make_unique<PromptClassifier>(std::move(clients), config.scheme, std::move(opts));
  }
  if (config.classifier.predictions.empty()) {
    throw Error("classifier.predictions is required for the replay classifier");
  }
  return std::make_unique<ReplayClassifier>(ReplayClassifier::from_jsonl(
      read_file(config.classifier.predictions), config.classifier.predictions.string(),
      config.scheme));
}

}  // namespace tierroute
