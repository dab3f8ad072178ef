#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tierroute/io.h"
#include "tierroute/subprocess.h"

namespace tierroute {

enum class VerdictKind { pass, fail, error, timeout };

std::string_view to_string(VerdictKind kind);
/// Throws Error for anything outside the four kinds.
VerdictKind verdict_kind_from_string(std::string_view s);

struct Verdict {
  VerdictKind kind = VerdictKind::error;
  std::string detail;
  std::int64_t duration_ms = 0;

  bool passed() const { return kind == VerdictKind::pass; }
  ordered_json to_json() const;
  static Verdict from_json(const json& j);

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline constexpr int kDefaultVerifyTimeoutMs = 10000;

struct VerifyRequest {
  std::string task_id;
  std::string candidate_code;
  std::vector<std::string> assertions;
  int timeout_ms = kDefaultVerifyTimeoutMs;
};

/// Candidate code + assertions -> verdict. Implementations are safe to call
/// from several threads.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual Verdict verify(const VerifyRequest& req) = 0;
};

/// Identifies a candidate in stub tables.
std::string code_hash(std::string_view code);

/// Returns scripted verdicts keyed by (task_id, code_hash).
class StubVerifier : public Verifier {
 public:
  using Key = std::pair<std::string, std::string>;

  StubVerifier() = default;
  explicit StubVerifier(std::map<Key, Verdict> table) : table_(std::move(table)) {}

  void script(std::string task_id, std::string_view code, Verdict verdict);

  /// Line-delimited {task_id, code | code_hash, kind, detail?, duration_ms?}.
  static StubVerifier from_jsonl(std::string_view text, std::string_view source);

  Verdict verify(const VerifyRequest& req) override;

 private:
  std::map<Key, Verdict> table_;
};

/// Verdict for `req` looked up in `table`; unknown keys yield error "unscripted".
Verdict stub_verify(const VerifyRequest& req, const std::map<StubVerifier::Key, Verdict>& table);

struct RunnerOptions {
  std::vector<std::string> command;
  std::chrono::milliseconds grace{500};
  std::chrono::milliseconds startup_timeout{10000};
};

/// Supervises one runner process speaking newline-delimited JSON frames.
/// One request at a time; movable between threads, never shared.
class RunnerHandle {
 public:
  /// Spawns the runner and waits for its ready frame. Throws Error on failure.
  explicit RunnerHandle(RunnerOptions options);

  RunnerHandle(RunnerHandle&&) noexcept = default;
  RunnerHandle& operator=(RunnerHandle&&) noexcept = default;

  /// Sends one request frame. On timeout, crash or a corrupt frame the
  /// runner is killed and restarted before returning.
  Verdict verify(const VerifyRequest& req);

  int restarts() const { return restarts_; }

 private:
  void start();
  void restart();

  RunnerOptions options_;
  std::optional<Subprocess> proc_;
  std::uint64_t next_id_ = 1;
  int restarts_ = 0;
};

/// Verifies against a pool of runner processes.
class RunnerPool : public Verifier {
 public:
  RunnerPool(RunnerOptions options, std::size_t size);

  Verdict verify(const VerifyRequest& req) override;
  std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<RunnerHandle>> idle_;
};

}  // namespace tierroute
