#include "support/synthetic.h"

#include <cstdlib>
#include <fstream>

#include "tierroute/cost_accounting.h"
#include "tierroute/router.h"

namespace tierroute::testing {

namespace fs = std::filesystem;

const std::vector<SyntheticCase>& twelve_task_cases() {
  // Levels under the default five-level table, worked by hand:
  //   t01 X1 == 5            -> 1     t07 all zero        -> cleaned
  //   t02 X1 + X2 = 7        -> 1     t08 X1 == 5         -> 1
  //   t03 X2 == 5            -> 2     t09 1+5 < 7, X2 == 5 -> 2
  //   t04 X3 == 5            -> 3     t10 X3 == 5         -> 3
  //   t05 X2 = 2             -> 4     t11 X3 = 2          -> 4
  //   t06 nothing holds      -> 5     t12 nothing holds   -> 5
  static const std::vector<SyntheticCase> cases = {
      {"t01", {5, 0, 0}, 1, 1}, {"t02", {3, 4, 0}, 1, 1}, {"t03", {0, 5, 1}, 2, 2},
      {"t04", {0, 1, 5}, 3, 3}, {"t05", {1, 2, 1}, 4, 2}, {"t06", {1, 1, 1}, 5, 5},
      {"t07", {0, 0, 0}, std::nullopt, 0},                {"t08", {5, 5, 5}, 1, 1},
      {"t09", {1, 5, 5}, 2, 2}, {"t10", {0, 3, 5}, 3, 4}, {"t11", {0, 0, 2}, 4, 4},
      {"t12", {0, 0, 1}, 5, 3},
  };
  return cases;
}

std::string good_reply(const std::string& task_id) {
  return "Here is the solution:\n```python\ndef solve_" + task_id + "(x):\n    return x\n```\n";
}

std::string bad_reply(const std::string& task_id) {
  return "def solve_" + task_id + "(x):\n    return None\n";
}

namespace {

std::string assertion_for(const std::string& id) { return "assert solve_" + id + "(1) == 1"; }

}  // namespace

Corpus synthetic_corpus(const std::vector<SyntheticCase>& cases) {
  std::vector<Task> tasks;
  for (const auto& c : cases) {
    Task t;
    t.task_id = c.task_id;
    t.prompt = "Write a function solve_" + c.task_id + " that returns its argument.";
    t.reference_code = "def solve_" + c.task_id + "(x):\n    return x";
    t.assertions = {assertion_for(c.task_id)};
    t.signature_hint = extract_signature_hint(t.assertions.front());
    tasks.push_back(std::move(t));
  }
  return Corpus(std::move(tasks), "synthetic");
}

json synthetic_replay_store(const std::vector<SyntheticCase>& cases, const TierSet& tiers,
                            int trials) {
  json store = json::object();
  for (const auto& c : cases) {
    for (std::size_t k = 0; k < tiers.size(); ++k) {
      for (int trial = 1; trial <= trials; ++trial) {
        const bool pass = trial <= c.counts[k];
        const auto text = pass ? good_reply(c.task_id) : bad_reply(c.task_id);
        store[ReplayBackend::key(c.task_id, tiers.at(k).tier_id, trial)] = {
            {"raw_text", text}, {"prompt_tokens", 40}, {"completion_tokens", 12}};
      }
    }
  }
  return store;
}

StubVerifier synthetic_stub(const std::vector<SyntheticCase>& cases) {
  StubVerifier stub;
  for (const auto& c : cases) {
    stub.script(c.task_id, extract_code(good_reply(c.task_id)), {VerdictKind::pass, "", 0});
    stub.script(c.task_id, extract_code(bad_reply(c.task_id)),
                {VerdictKind::fail, assertion_for(c.task_id), 0});
  }
  return stub;
}

std::string synthetic_stub_jsonl(const std::vector<SyntheticCase>& cases) {
  std::vector<ordered_json> rows;
  for (const auto& c : cases) {
    rows.push_back({{"task_id", c.task_id},
                    {"code", extract_code(good_reply(c.task_id))},
                    {"kind", "pass"}});
    rows.push_back({{"task_id", c.task_id},
                    {"code_hash", code_hash(extract_code(bad_reply(c.task_id)))},
                    {"kind", "fail"},
                    {"detail", assertion_for(c.task_id)}});
  }
  return to_jsonl(rows);
}

std::string synthetic_predictions_jsonl(const std::vector<SyntheticCase>& cases) {
  std::vector<ordered_json> rows;
  for (const auto& c : cases) {
    if (c.expected_level) rows.push_back({{"task_id", c.task_id}, {"level", c.predicted_level}});
  }
  return to_jsonl(rows);
}

std::vector<LabeledRecord> synthetic_labeled(std::size_t n) {
  std::vector<LabeledRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledRecord r;
    r.task_id = "s" + std::to_string(i + 1);
    r.prompt = "Write a function to solve synthetic problem " + std::to_string(i + 1) + ".";
    r.counts = {static_cast<int>(i % 6), 5, 5};
    r.trials = 5;
    r.level = static_cast<int>(i % 5) + 1;
    r.scheme_id = "five_level";
    out.push_back(std::move(r));
  }
  return out;
}

fs::path write_synthetic_project(const fs::path& dir, const std::vector<SyntheticCase>& cases) {
  fs::create_directories(dir);
  const auto tiers = TierSet::default_three_tier();
  write_file_atomic(dir / "corpus.jsonl", save(synthetic_corpus(cases)));
  write_file_atomic(dir / "replay.json", synthetic_replay_store(cases, tiers, 5).dump(1));
  write_file_atomic(dir / "stub.jsonl", synthetic_stub_jsonl(cases));
  write_file_atomic(dir / "predictions.jsonl", synthetic_predictions_jsonl(cases));

  ordered_json cfg;
  cfg["tiers"] = ordered_json::array();
  for (const auto& t : tiers.tiers()) {
    cfg["tiers"].push_back({{"tier_id", t.tier_id},
                            {"tier_index", t.tier_index},
                            {"unit_cost", t.unit_cost},
                            {"backend", {{"kind", "replay"}}},
                            {"prompt_profile", {{"reduced", t.prompt_profile.reduced}}}});
  }
  cfg["trials"] = 5;
  cfg["concurrency"] = 3;
  cfg["replay_store"] = "replay.json";
  cfg["verifier"] = {{"kind", "stub"}, {"table", "stub.jsonl"}};
  cfg["classifier"] = {{"kind", "replay"}, {"predictions", "predictions.jsonl"}};
  cfg["paths"] = {{"corpus", "corpus.jsonl"}, {"out_dir", "out"}};
  write_file_atomic(dir / "config.json", cfg.dump(2));
  return dir / "config.json";
}

PipelineArtifacts run_synthetic_pipeline(const std::vector<SyntheticCase>& cases,
                                         std::size_t concurrency) {
  const auto tiers = TierSet::default_three_tier();
  const auto corpus = synthetic_corpus(cases);
  auto replay = std::make_shared<ReplayBackend>(synthetic_replay_store(cases, tiers, 5));
  TierClients clients(RetryPolicy{}, [](std::chrono::milliseconds) {});
  for (const auto& t : tiers.tiers()) clients.add(t.tier_id, replay);
  auto stub = synthetic_stub(cases);

  PipelineArtifacts out;
  CollectOptions opts;
  opts.concurrency_per_tier = concurrency;
  auto collected = collect_profiles(corpus, tiers, clients, stub, opts);
  for (const auto& p : collected.profiles) out.profiles += p.to_json().dump() + "\n";
  for (const auto& o : collected.outcomes) out.audit += o.to_json().dump() + "\n";

  auto labeled = label_corpus(corpus, collected.profile_map(), MappingTable::default_five_trial());
  for (const auto& r : labeled.records) out.labeled += r.to_json().dump() + "\n";
  out.cleaned = labeled.cleaned;
  out.records = labeled.records;

  std::vector<Task> kept;
  for (const auto& r : labeled.records) kept.push_back(*corpus.find(r.task_id));
  Corpus routed(std::move(kept), "labeled");
  auto classifier = ReplayClassifier::from_jsonl(synthetic_predictions_jsonl(cases), "predictions",
                                                 LevelScheme::five_level());
  const auto before = clients.calls();
  RouteOptions ropts;
  ropts.concurrency = concurrency;
  auto batch = route_batch(routed, RoutingPolicy::default_for(LevelScheme::five_level(), tiers),
                           classifier, clients, tiers, &stub, ropts);
  out.completion_requests = clients.calls() - before;
  for (const auto& r : batch.records) out.route_log += r.to_json().dump() + "\n";
  auto report = compute_report(distribution_from_routes(batch.records, tiers));
  out.cost_report = report.to_json().dump();
  out.savings = report.savings;
  return out;
}

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "tierroute-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw Error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace tierroute::testing
