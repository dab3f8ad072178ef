#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <cstdlib>

#include "tierroute/backends.h"

namespace tierroute {

BackendError::Kind classify_http_status(int status) {
  if (status == 429 || status >= 500 || status <= 0) return BackendError::Kind::transient;
  if (status == 401 || status == 403) return BackendError::Kind::auth;
  return BackendError::Kind::permanent;
}

HttpChatBackend::HttpChatBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error("http backend requires an endpoint");
  if (config_.model.empty()) throw Error("http backend requires a model name");
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw BackendError(BackendError::Kind::auth,
                         "environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
}

std::string HttpChatBackend::request_body(const BackendConfig& config,
                                          const CompletionRequest& req) {
  ordered_json body;
  body["model"] = config.model;
  body["messages"] = ordered_json::array({{{"role", "user"}, {"content", req.prompt}}});
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_tokens;
  return body.dump();
}

CompletionResponse HttpChatBackend::parse_response(std::string_view body) {
  try {
    auto j = json::parse(body);
    const auto& choice = j.at("choices").at(0);
    CompletionResponse resp;
    const auto& content = choice.at("message").at("content");
    resp.text = content.is_null() ? std::string() : content.get<std::string>();
    if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
      resp.finish_reason = fr->get<std::string>();
    }
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      resp.prompt_tokens = usage->value("prompt_tokens", 0);
      resp.completion_tokens = usage->value("completion_tokens", 0);
    }
    return resp;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::malformed,
                       std::string("malformed chat-completion response: ") + e.what());
  }
}

CompletionResponse HttpChatBackend::complete(const CompletionRequest& req) {
  httplib::Client client(config_.endpoint);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(config_.path, headers, request_body(config_, req), "application/json");
  const auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  if (!res) {
    throw BackendError(BackendError::Kind::transient,
                       "HTTP transport error: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError(classify_http_status(res->status),
                       "HTTP " + std::to_string(res->status) + " from " + config_.endpoint);
  }
  auto resp = parse_response(res->body);
  resp.latency_ms = elapsed;
  return resp;
}

}  // namespace tierroute
