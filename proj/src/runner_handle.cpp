#include <chrono>

#include "tierroute/verifier.h"

namespace tierroute {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
}

}  // namespace

RunnerHandle::RunnerHandle(RunnerOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw Error("runner command is empty");
  start();
}

void RunnerHandle::start() {
  proc_.reset();
  proc_.emplace(options_.command);
  auto ready = proc_->read_line(options_.startup_timeout);
  if (ready.status != Subprocess::ReadStatus::line) {
    proc_.reset();
    throw Error("runner did not send a ready frame");
  }
  bool ok = false;
  try {
    auto j = json::parse(ready.line);
    ok = j.is_object() && j.value("ready", false) && j.value("protocol", 0) == 1;
  } catch (const nlohmann::json::exception&) {
  }
  if (!ok) {
    proc_.reset();
    throw Error("unexpected ready frame: " + ready.line);
  }
}

void RunnerHandle::restart() {
  if (proc_) {
    proc_->kill();
    proc_->wait();
  }
  ++restarts_;
  start();
}

Verdict RunnerHandle::verify(const VerifyRequest& req) {
  if (req.assertions.empty()) return {VerdictKind::error, "request has no assertions", 0};
  if (req.timeout_ms <= 0) return {VerdictKind::error, "timeout_ms must be positive", 0};
  if (!proc_) start();

  const auto id = next_id_++;
  ordered_json frame;
  frame["id"] = id;
  frame["code"] = req.candidate_code;
  frame["assertions"] = req.assertions;
  frame["timeout_ms"] = req.timeout_ms;
  std::string line;
  try {
    line = frame.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  } catch (const nlohmann::json::exception& e) {
    return {VerdictKind::error, std::string("cannot encode request: ") + e.what(), 0};
  }

  const auto start_time = Clock::now();
  if (!proc_->write_all(line)) {
    restart();
    return {VerdictKind::error, "runner closed its input", elapsed_ms(start_time)};
  }

  const auto budget = std::chrono::milliseconds(req.timeout_ms) + options_.grace;
  const auto deadline = start_time + budget;
  auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  auto reply = proc_->read_line(std::max(remaining, std::chrono::milliseconds(0)));

  switch (reply.status) {
    case Subprocess::ReadStatus::timeout:
      restart();
      return {VerdictKind::timeout,
              "exceeded " + std::to_string(req.timeout_ms) + " ms", elapsed_ms(start_time)};
    case Subprocess::ReadStatus::eof:
      restart();
      return {VerdictKind::error, "runner exited unexpectedly", elapsed_ms(start_time)};
    case Subprocess::ReadStatus::line:
      break;
  }

  try {
    auto j = json::parse(reply.line);
    if (!j.contains("id") || j.at("id") != id) {
      throw Error("response id does not echo request id " + std::to_string(id));
    }
    auto v = Verdict::from_json(j);
    return v;
  } catch (const std::exception& e) {
    restart();
    return {VerdictKind::error, std::string("protocol violation: ") + e.what(),
            elapsed_ms(start_time)};
  }
}

RunnerPool::RunnerPool(RunnerOptions options, std::size_t size) : size_(size) {
  if (size == 0) throw Error("runner pool size must be >= 1");
  for (std::size_t i = 0; i < size; ++i) {
    idle_.push_back(std::make_unique<RunnerHandle>(options));
  }
}

Verdict RunnerPool::verify(const VerifyRequest& req) {
  std::unique_ptr<RunnerHandle> handle;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !idle_.empty(); });
    handle = std::move(idle_.back());
    idle_.pop_back();
  }
  struct Return {
    RunnerPool& pool;
    std::unique_ptr<RunnerHandle>& h;
    ~Return() {
      {
        std::lock_guard lock(pool.mu_);
        pool.idle_.push_back(std::move(h));
      }
      pool.cv_.notify_one();
    }
  } give_back{*this, handle};
  return handle->verify(req);
}

}  // namespace tierroute
