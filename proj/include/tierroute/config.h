#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tierroute/backends.h"
#include "tierroute/classifier.h"
#include "tierroute/labeling.h"
#include "tierroute/router.h"
#include "tierroute/verifier.h"

namespace tierroute {

struct VerifierConfig {
  std::string kind = "stub";  // stub | process
  std::filesystem::path table;
  std::vector<std::string> command;
  std::size_t pool_size = 0;  // 0: use the collector concurrency
  int grace_ms = 500;
};

struct ClassifierConfig {
  std::string kind = "replay";  // replay | prompt
  std::filesystem::path predictions;
  std::string tier_id = "classifier";
  BackendConfig backend;
  std::string instruction;
  double temperature = 1.0;
};

struct RunPaths {
  std::filesystem::path corpus;
  std::filesystem::path profiles;
  std::filesystem::path labeled;
  std::filesystem::path out_dir = ".";
};

/// Everything a pipeline run needs, loaded from one JSON file. Relative
/// paths resolve against the file's directory.
struct RunConfig {
  TierSet tiers;
  LevelScheme scheme = LevelScheme::five_level();
  MappingTable mapping = MappingTable::default_five_trial();
  std::optional<RoutingPolicy> policy;
  int trials = 5;
  double temperature = 1.0;
  int max_tokens = 1024;
  std::size_t concurrency = 4;
  int verify_timeout_ms = kDefaultVerifyTimeoutMs;
  RetryPolicy retry;
  VerifierConfig verifier;
  ClassifierConfig classifier;
  std::optional<std::filesystem::path> replay_store;
  RunPaths paths;

  /// Throws ConfigError enumerating every problem found.
  static RunConfig from_json(const json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Policy from the config, or the default for the scheme.
  const RoutingPolicy& routing_policy() const { return *policy; }
};

std::shared_ptr<ReplayBackend> open_replay(const RunConfig& config);
std::shared_ptr<TierClients> make_clients(const RunConfig& config,
                                          const std::shared_ptr<ReplayBackend>& replay);
std::unique_ptr<Verifier> make_verifier(const RunConfig& config);
std::unique_ptr<ClassifierAdapter> make_classifier(const RunConfig& config,
                                                   const std::shared_ptr<ReplayBackend>& replay);

}  // namespace tierroute
