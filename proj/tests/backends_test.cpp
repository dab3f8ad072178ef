#include "httplib.h"

#include <atomic>
#include <thread>

#include "doctest.h"
#include "support/synthetic.h"
#include "tierroute/backends.h"

using namespace tierroute;
using namespace std::chrono_literals;

namespace {

Task similar_elements_task() {
  Task t;
  t.task_id = "2";
  t.prompt = "Write a function to find the similar elements from the given two tuple lists.";
  t.assertions = {"assert similar_elements((3, 4, 5, 6),(5, 7, 4, 10)) == (4, 5)"};
  t.signature_hint = extract_signature_hint(t.assertions.front());
  return t;
}

Sleeper no_sleep(std::vector<std::chrono::milliseconds>* log = nullptr) {
  return [log](std::chrono::milliseconds d) {
    if (log) log->push_back(d);
  };
}

CompletionRequest request(std::string task, std::string tier, int trial) {
  return {std::move(tier), std::move(task), trial, "prompt", 1.0, 1024};
}

}  // namespace

TEST_CASE("render_prompt composes the full profile") {
  auto t = similar_elements_task();
  PromptProfile full;
  auto p = render_prompt(t, full);
  CHECK(p.find(std::string(kDefaultSystemPrompt)) == 0);
  CHECK(p.find(t.prompt) != std::string::npos);
  CHECK(p.find("similar_elements(tuple, tuple)") != std::string::npos);
  CHECK(render_prompt(t, full) == p);

  PromptProfile no_hint;
  no_hint.include_signature = false;
  CHECK(render_prompt(t, no_hint).find("similar_elements(") == std::string::npos);

  t.signature_hint.reset();
  CHECK(render_prompt(t, full) == std::string(kDefaultSystemPrompt) + "\n\n" + t.prompt + "\n");
}

TEST_CASE("render_prompt reduced profile drops the system block") {
  auto t = similar_elements_task();
  PromptProfile reduced;
  reduced.reduced = true;
  auto p = render_prompt(t, reduced);
  CHECK(p.find("Respond with only the code") == std::string::npos);
  CHECK(p == t.prompt + "\nFunction format: similar_elements(tuple, tuple)\n");
}

TEST_CASE("render_prompt never leaks assertion bodies") {
  auto res = ingest(read_file(TIERROUTE_FIXTURES "/mbpp_sample.jsonl"), "mbpp");
  for (const auto& t : res.corpus.tasks()) {
    for (bool reduced : {false, true}) {
      PromptProfile profile;
      profile.reduced = reduced;
      auto p = render_prompt(t, profile);
      for (const auto& a : t.assertions) {
        CHECK(p.find(a) == std::string::npos);
        auto eq = a.find("==");
        if (eq != std::string::npos) {
          auto expected = a.substr(eq + 2);
          while (!expected.empty() && expected.front() == ' ') expected.erase(0, 1);
          while (!expected.empty() && expected.back() == ' ') expected.pop_back();
          if (expected.size() > 4) CHECK(p.find(expected) == std::string::npos);
        }
      }
    }
  }
}

TEST_CASE("extract_code") {
  CHECK(extract_code("Here is the code:\n```python\ndef f(x):\n return x\n```") ==
        "def f(x):\n return x");
  const std::string bare = "def f(x):\n    return x + 1\n";
  CHECK(extract_code(bare) == bare);
  CHECK(extract_code("Sure, here it is.\nimport math\ndef g():\n  pass") ==
        "import math\ndef g():\n  pass");
  CHECK(extract_code("no code at all") == "no code at all");
  CHECK(extract_code("```\ndef open_fence():\n  pass\n") == "def open_fence():\n  pass");
  CHECK(extract_code(read_file(TIERROUTE_FIXTURES "/two_blocks.txt")) ==
        read_file(TIERROUTE_FIXTURES "/two_blocks.expected"));
}

TEST_CASE("TierSet validation") {
  CHECK_NOTHROW(TierSet::default_three_tier());
  ModelTier a{"a", 1, 1.0, {}, {}};
  ModelTier b{"b", 3, 10.0, {}, {}};
  CHECK_THROWS_AS(TierSet({a, b}), ConfigError);
  ModelTier c{"c", 2, 1.0, {}, {}};
  CHECK_THROWS_AS(TierSet({a, c}), ConfigError);
  ModelTier d{"a", 2, 5.0, {}, {}};
  CHECK_THROWS_AS(TierSet({a, d}), ConfigError);

  // Out-of-order declaration is sorted by tier_index.
  ModelTier e{"e", 2, 5.0, {}, {}};
  TierSet set({e, a});
  CHECK(set.at(0).tier_id == "a");
  CHECK(set.position("e") == 1);
  CHECK(set.unit_costs() == std::vector<double>{1.0, 5.0});
}

TEST_CASE("replay backend serves recorded replies") {
  json store{{"t7/small/1", {{"raw_text", "def f(): pass"}, {"completion_tokens", 4}}}};
  ReplayBackend replay(store);
  auto resp = replay.complete(request("t7", "small", 1));
  CHECK(resp.text == "def f(): pass");
  CHECK(resp.completion_tokens == 4);
  CHECK_THROWS_WITH_AS(replay.complete(request("t7", "small", 2)),
                       doctest::Contains("unrecorded interaction t7/small/2"), BackendError);
}

TEST_CASE("replayed 429 is retried once and then succeeds") {
  json store{{"t1/small/1", json::array({{{"status", 429}}, {{"raw_text", "ok"}}})}};
  auto replay = std::make_shared<ReplayBackend>(store);
  std::vector<std::chrono::milliseconds> slept;
  TierClients clients({}, no_sleep(&slept));
  clients.add("small", replay);
  auto resp = clients.complete(request("t1", "small", 1));
  CHECK(resp.text == "ok");
  CHECK(resp.retries == 1);
  CHECK(slept == std::vector<std::chrono::milliseconds>{500ms});
  CHECK(replay->requests() == 2);
  CHECK(clients.calls() == 1);
}

TEST_CASE("permanent failures are not retried") {
  json store{{"a/small/1", json::array({{{"status", 401}}, {{"raw_text", "never"}}})},
             {"b/small/1", json::array({{{"status", 404}}, {{"raw_text", "never"}}})}};
  auto replay = std::make_shared<ReplayBackend>(store);
  TierClients clients({}, no_sleep());
  clients.add("small", replay);
  try {
    clients.complete(request("a", "small", 1));
    FAIL("expected auth failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::auth);
  }
  try {
    clients.complete(request("b", "small", 1));
    FAIL("expected permanent failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::permanent);
  }
  CHECK(replay->requests() == 2);
}

TEST_CASE("retry budget is capped") {
  json attempts = json::array();
  for (int i = 0; i < 10; ++i) attempts.push_back({{"status", 503}});
  auto replay = std::make_shared<ReplayBackend>(json{{"t/small/1", attempts}});
  RetryPolicy policy;
  policy.max_retries = 3;
  std::vector<std::chrono::milliseconds> slept;
  TierClients clients(policy, no_sleep(&slept));
  clients.add("small", replay);
  try {
    clients.complete(request("t", "small", 1));
    FAIL("expected exhaustion");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::exhausted);
  }
  CHECK(replay->requests() == 4);
  CHECK(slept == std::vector<std::chrono::milliseconds>{500ms, 1000ms, 2000ms});
}

TEST_CASE("backoff grows geometrically up to the cap") {
  RetryPolicy p;
  CHECK(p.backoff(0) == 500ms);
  CHECK(p.backoff(3) == 4000ms);
  CHECK(p.backoff(4) == 8000ms);
  CHECK(p.backoff(9) == 8000ms);
}

TEST_CASE("status classification") {
  CHECK(classify_http_status(429) == BackendError::Kind::transient);
  CHECK(classify_http_status(500) == BackendError::Kind::transient);
  CHECK(classify_http_status(503) == BackendError::Kind::transient);
  CHECK(classify_http_status(401) == BackendError::Kind::auth);
  CHECK(classify_http_status(403) == BackendError::Kind::auth);
  CHECK(classify_http_status(400) == BackendError::Kind::permanent);
  CHECK(classify_http_status(404) == BackendError::Kind::permanent);
}

TEST_CASE("TierClients rejects bad requests") {
  TierClients clients({}, no_sleep());
  auto req = request("t", "nowhere", 1);
  CHECK_THROWS_WITH_AS(clients.complete(req), doctest::Contains("no backend"), Error);
  clients.add("nowhere", std::make_shared<ReplayBackend>(json::object()));
  req.temperature = -0.1;
  CHECK_THROWS_WITH_AS(clients.complete(req), doctest::Contains("temperature"), Error);
}

TEST_CASE("http chat backend speaks the chat-completion shape") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;
  std::mutex mu;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++hits;
    {
      std::lock_guard lock(mu);
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
    }
    if (n == 1) {
      res.status = 429;
      return;
    }
    res.set_content(
        R"({"choices":[{"message":{"role":"assistant","content":"def f():\n  return 1"},"finish_reason":"stop"}],"usage":{"prompt_tokens":11,"completion_tokens":7}})",
        "application/json");
  });
  server.Post("/denied", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  server.Post("/garbled", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("TIERROUTE_TEST_KEY", "sk-test", 1);
  BackendConfig cfg;
  cfg.kind = "http";
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "gpt-test";
  cfg.api_key_env = "TIERROUTE_TEST_KEY";
  cfg.timeout_ms = 5000;

  TierClients clients({}, no_sleep());
  clients.add("medium", std::make_shared<HttpChatBackend>(cfg));
  CompletionRequest req{"medium", "t1", 1, "Write f.", 1.0, 64};
  auto resp = clients.complete(req);
  CHECK(resp.text == "def f():\n  return 1");
  CHECK(resp.retries == 1);
  CHECK(resp.prompt_tokens == 11);
  CHECK(resp.completion_tokens == 7);
  CHECK(resp.finish_reason == "stop");
  CHECK(hits == 2);
  {
    std::lock_guard lock(mu);
    auto body = json::parse(last_body);
    CHECK(body["model"] == "gpt-test");
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "Write f.");
    CHECK(body["temperature"] == 1.0);
    CHECK(body["max_tokens"] == 64);
    CHECK(last_auth == "Bearer sk-test");
  }

  auto denied = cfg;
  denied.path = "/denied";
  TierClients deny_clients({}, no_sleep());
  deny_clients.add("medium", std::make_shared<HttpChatBackend>(denied));
  hits = 0;
  try {
    deny_clients.complete(req);
    FAIL("expected auth failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::auth);
  }
  CHECK(hits == 1);

  auto garbled = cfg;
  garbled.path = "/garbled";
  HttpChatBackend garbled_backend(garbled);
  try {
    garbled_backend.complete(req);
    FAIL("expected malformed response");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::malformed);
  }

  server.stop();
  thread.join();

  ::unsetenv("TIERROUTE_MISSING_KEY");
  auto missing = cfg;
  missing.api_key_env = "TIERROUTE_MISSING_KEY";
  CHECK_THROWS_AS(HttpChatBackend{missing}, BackendError);
}

TEST_CASE("process backend pipes the prompt through a local command") {
  BackendConfig cfg;
  cfg.kind = "process";
  cfg.model = "tiny";
  cfg.command = {"/bin/sh", "-c", "printf '{model}:'; tr a-z A-Z"};
  ProcessBackend backend(cfg);
  CompletionRequest req{"small", "t", 1, "def f(): pass", 1.0, 32};
  auto resp = backend.complete(req);
  CHECK(resp.text == "tiny:DEF F(): PASS");
  CHECK(resp.completion_tokens == 3);

  cfg.command = {"/bin/sh", "-c", "cat >/dev/null; exit 4"};
  try {
    ProcessBackend(cfg).complete(req);
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::transient);
  }

  cfg.command = {"/nonexistent/model-binary"};
  try {
    ProcessBackend(cfg).complete(req);
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::permanent);
  }
}
