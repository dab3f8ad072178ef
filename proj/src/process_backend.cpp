#include <chrono>
#include <sstream>

#include "tierroute/backends.h"
#include "tierroute/subprocess.h"

namespace tierroute {

namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

int word_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  int n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

ProcessBackend::ProcessBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.command.empty()) throw Error("process backend requires a command");
}

CompletionResponse ProcessBackend::complete(const CompletionRequest& req) {
  std::vector<std::string> argv = config_.command;
  std::ostringstream temp;
  temp << req.temperature;
  for (auto& arg : argv) {
    replace_all(arg, "{model}", config_.model);
    replace_all(arg, "{temperature}", temp.str());
    replace_all(arg, "{max_tokens}", std::to_string(req.max_tokens));
  }

  const auto start = std::chrono::steady_clock::now();
  std::optional<Subprocess> proc;
  try {
    proc.emplace(argv);
  } catch (const Error& e) {
    throw BackendError(BackendError::Kind::permanent, e.what());
  }
  proc->write_all(req.prompt);
  proc->close_stdin();
  auto out = proc->read_all(std::chrono::milliseconds(config_.timeout_ms));
  if (!out) {
    proc->kill();
    proc->wait();
    throw BackendError(BackendError::Kind::transient,
                       "local model timed out after " + std::to_string(config_.timeout_ms) + " ms");
  }
  int status = proc->wait();
  if (status != 0) {
    throw BackendError(BackendError::Kind::transient,
                       "local model exited with status " + std::to_string(status));
  }

  CompletionResponse resp;
  resp.text = std::move(*out);
  // Whitespace-delimited word counts stand in for tokenizer counts.
  resp.prompt_tokens = word_count(req.prompt);
  resp.completion_tokens = word_count(resp.text);
  resp.finish_reason = "stop";
  resp.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return resp;
}

}  // namespace tierroute
