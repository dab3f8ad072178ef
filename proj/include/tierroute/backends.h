#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tierroute/corpus.h"
#include "tierroute/io.h"

namespace tierroute {

inline constexpr std::string_view kDefaultSystemPrompt =
    "Respond with only the code implementing the described function, using the exact function "
    "name and arguments given. No explanations.";

struct PromptProfile {
  std::string system_prompt{kDefaultSystemPrompt};
  bool include_signature = true;
  /// Small-tier profile: task text plus function format, no system block.
  bool reduced = false;
};

/// Connection settings for one tier. Only the fields relevant to `kind` are read.
struct BackendConfig {
  std::string kind = "replay";  // replay | http | process
  std::string endpoint;         // http: base URL, e.g. https://api.openai.com
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;      // http: environment variable holding the key
  std::vector<std::string> command;  // process: argv template
  int timeout_ms = 60000;
};

struct ModelTier {
  std::string tier_id;
  int tier_index = 0;  // 1..K, capability ascending
  double unit_cost = 0.0;
  PromptProfile prompt_profile;
  BackendConfig backend;
};

/// Tiers ordered by tier_index. Construction validates 1..K without gaps
/// and strictly increasing unit costs.
class TierSet {
 public:
  TierSet() = default;
  explicit TierSet(std::vector<ModelTier> tiers);

  const std::vector<ModelTier>& tiers() const { return tiers_; }
  std::size_t size() const { return tiers_.size(); }
  const ModelTier& at(std::size_t index0) const { return tiers_.at(index0); }
  const ModelTier* find(std::string_view tier_id) const;
  /// 0-based position of `tier_id`; throws Error if unknown.
  std::size_t position(std::string_view tier_id) const;
  std::vector<double> unit_costs() const;

  /// small=1, medium=10, large=100 with the small tier on the reduced prompt.
  static TierSet default_three_tier();

 private:
  std::vector<ModelTier> tiers_;
};

/// Problems with a tier list, without throwing. Empty means valid.
std::vector<std::string> validate_tiers(const std::vector<ModelTier>& tiers);

struct CompletionRequest {
  std::string tier_id;
  std::string task_id;
  int trial_index = 1;
  std::string prompt;
  double temperature = 1.0;
  int max_tokens = 1024;
};

struct CompletionResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  double latency_ms = 0.0;
  std::string finish_reason;
  int retries = 0;
};

class BackendError : public Error {
 public:
  enum class Kind {
    transient,   // 429, 5xx, timeouts: retried
    permanent,   // other 4xx, spawn failures
    auth,        // 401/403
    malformed,   // unparseable response body
    unrecorded,  // replay store has no entry
    exhausted,   // retry budget spent
  };
  BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  bool retryable() const { return kind_ == Kind::transient; }

 private:
  Kind kind_;
};

/// One model endpoint. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& req) = 0;
};

struct RetryPolicy {
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff(int attempt) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

/// Calls `backend`, retrying transient failures with exponential backoff.
/// The returned response records the number of retries taken.
CompletionResponse complete_with_retry(Backend& backend, const CompletionRequest& req,
                                       const RetryPolicy& policy, const Sleeper& sleep);

/// Tier id -> backend, plus the shared retry policy.
class TierClients {
 public:
  TierClients(RetryPolicy policy = {}, Sleeper sleeper = real_sleeper());

  void add(std::string tier_id, std::shared_ptr<Backend> backend);
  bool has(std::string_view tier_id) const;
  /// Validates that req.temperature >= 0 and dispatches to the tier's backend.
  CompletionResponse complete(const CompletionRequest& req) const;
  /// Number of completion calls made through this object (attempts excluded).
  std::size_t calls() const;

 private:
  RetryPolicy policy_;
  Sleeper sleeper_;
  std::map<std::string, std::shared_ptr<Backend>, std::less<>> backends_;
  mutable std::mutex mu_;
  mutable std::size_t calls_ = 0;
};

std::string render_prompt(const Task& task, const PromptProfile& profile);

/// Pulls code out of a model reply: fenced blocks if any, else from the
/// first def/import/class line, else the input unchanged.
std::string extract_code(std::string_view raw);

/// Serves recorded replies keyed by "task_id/tier_id/trial_index".
///
/// A key maps to a reply object {raw_text, prompt_tokens, completion_tokens}
/// or to a list of attempts consumed in order, where an attempt of the form
/// {"status": 429} replays a transport failure with that HTTP status.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(json store);
  static std::shared_ptr<ReplayBackend> from_file(const std::filesystem::path& path);

  CompletionResponse complete(const CompletionRequest& req) override;

  static std::string key(std::string_view task_id, std::string_view tier_id, int trial_index);
  std::size_t requests() const;

 private:
  json store_;
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> attempts_;
  std::size_t requests_ = 0;
};

/// Maps an HTTP status to the error kind used for retry decisions.
BackendError::Kind classify_http_status(int status);

/// OpenAI-style chat-completion client.
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(BackendConfig config);
  CompletionResponse complete(const CompletionRequest& req) override;

  static std::string request_body(const BackendConfig& config, const CompletionRequest& req);
  /// Parses a 200 response body. Throws BackendError(malformed).
  static CompletionResponse parse_response(std::string_view body);

 private:
  BackendConfig config_;
  std::string api_key_;
};

/// Runs a local command per request, writing the prompt to stdin and taking
/// stdout as the reply. "{model}", "{temperature}" and "{max_tokens}" in the
/// argv template are substituted.
class ProcessBackend : public Backend {
 public:
  explicit ProcessBackend(BackendConfig config);
  CompletionResponse complete(const CompletionRequest& req) override;

 private:
  BackendConfig config_;
};

/// Builds the backend named by `config.kind`. Replay backends share `replay`.
std::shared_ptr<Backend> make_backend(const BackendConfig& config,
                                      const std::shared_ptr<ReplayBackend>& replay);

}  // namespace tierroute
