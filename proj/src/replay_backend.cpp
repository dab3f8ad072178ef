#include "tierroute/backends.h"

namespace tierroute {

ReplayBackend::ReplayBackend(json store) : store_(std::move(store)) {
  if (!store_.is_object()) throw Error("replay store must be a JSON object");
}

std::shared_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path) {
  try {
    return std::make_shared<ReplayBackend>(json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string ReplayBackend::key(std::string_view task_id, std::string_view tier_id,
                               int trial_index) {
  std::string k(task_id);
  k += '/';
  k += tier_id;
  k += '/';
  k += std::to_string(trial_index);
  return k;
}

CompletionResponse ReplayBackend::complete(const CompletionRequest& req) {
  const auto k = key(req.task_id, req.tier_id, req.trial_index);
  json entry;
  {
    std::lock_guard lock(mu_);
    ++requests_;
    auto it = store_.find(k);
    if (it == store_.end()) {
      throw BackendError(BackendError::Kind::unrecorded, "unrecorded interaction " + k);
    }
    if (it->is_array()) {
      auto& n = attempts_[k];
      if (n >= it->size()) {
        throw BackendError(BackendError::Kind::unrecorded,
                           "unrecorded interaction " + k + " (attempt " + std::to_string(n + 1) +
                               ")");
      }
      entry = (*it)[n++];
    } else {
      entry = *it;
    }
  }

  if (entry.contains("status")) {
    int status = entry.at("status").get<int>();
    throw BackendError(classify_http_status(status),
                       "replayed HTTP " + std::to_string(status) + " for " + k);
  }
  try {
    CompletionResponse resp;
    resp.text = entry.at("raw_text").get<std::string>();
    resp.prompt_tokens = entry.value("prompt_tokens", 0);
    resp.completion_tokens = entry.value("completion_tokens", 0);
    resp.finish_reason = entry.value("finish_reason", std::string("stop"));
    return resp;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::malformed, "replay entry " + k + ": " + e.what());
  }
}

std::size_t ReplayBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

}  // namespace tierroute
