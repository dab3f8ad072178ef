// tierroute: complexity-labeled dataset construction and cost-aware routing.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tierroute/classifier.h"
#include "tierroute/config.h"
#include "tierroute/corpus.h"
#include "tierroute/cost_accounting.h"
#include "tierroute/labeling.h"
#include "tierroute/router.h"

namespace fs = std::filesystem;
using namespace tierroute;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> concurrency;
  std::string replay;
  std::string out_dir;
};

RunConfig load_config(const Globals& g) {
  if (g.config.empty()) throw Error("--config is required for this command");
  auto cfg = RunConfig::load(g.config);
  if (!g.replay.empty()) {
    if (!fs::exists(g.replay)) throw ConfigError({"--replay: " + g.replay + " does not exist"});
    cfg.replay_store = g.replay;
  }
  if (g.concurrency) cfg.concurrency = *g.concurrency;
  if (!g.out_dir.empty()) cfg.paths.out_dir = g.out_dir;
  return cfg;
}

fs::path out_dir(const Globals& g, const std::optional<RunConfig>& cfg = std::nullopt) {
  fs::path dir = !g.out_dir.empty() ? fs::path(g.out_dir) : cfg ? cfg->paths.out_dir : fs::path(".");
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const ordered_json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

Corpus load_corpus(const fs::path& path) {
  auto res = ingest(read_file(path), path.filename().string());
  for (const auto& d : res.rejected) {
    std::cerr << path.string() << ":" << d.line << ": rejected: " << d.message << "\n";
  }
  return std::move(res.corpus);
}

fs::path pick(const std::string& flag, const fs::path& fallback, const char* what) {
  if (!flag.empty()) return flag;
  if (fallback.empty()) throw Error(std::string("no ") + what + " given");
  return fallback;
}

int cmd_ingest(const Globals& g, const std::string& input) {
  auto res = ingest(read_file(input), fs::path(input).filename().string());
  const auto dir = out_dir(g);
  write_file_atomic(dir / "corpus.jsonl", save(res.corpus));
  ordered_json report;
  report["source"] = input;
  report["accepted"] = res.corpus.size();
  report["rejected"] = ordered_json::array();
  for (const auto& d : res.rejected) {
    report["rejected"].push_back({{"line", d.line}, {"message", d.message}});
    std::cerr << input << ":" << d.line << ": rejected: " << d.message << "\n";
  }
  write_json(dir / "ingest_report.json", report);
  std::cout << "ingested " << res.corpus.size() << " tasks (" << res.rejected.size()
            << " rejected)\n";
  return 0;
}

int cmd_collect(const Globals& g, const std::string& corpus_flag) {
  auto cfg = load_config(g);
  auto corpus = load_corpus(pick(corpus_flag, cfg.paths.corpus, "corpus"));
  auto replay = open_replay(cfg);
  auto clients = make_clients(cfg, replay);
  auto verifier = make_verifier(cfg);

  CollectOptions opts;
  opts.trials = cfg.trials;
  opts.temperature = cfg.temperature;
  opts.max_tokens = cfg.max_tokens;
  opts.concurrency_per_tier = cfg.concurrency;
  opts.verify_timeout_ms = cfg.verify_timeout_ms;
  auto result = collect_profiles(corpus, cfg.tiers, *clients, *verifier, opts);

  const auto dir = out_dir(g, cfg);
  std::vector<ordered_json> audit;
  for (const auto& o : result.outcomes) audit.push_back(o.to_json());
  write_file_atomic(dir / "audit.jsonl", to_jsonl(audit));
  std::vector<ordered_json> profiles;
  for (const auto& p : result.profiles) profiles.push_back(p.to_json());
  write_file_atomic(dir / "profiles.jsonl", to_jsonl(profiles));
  ordered_json report;
  report["tasks"] = corpus.size();
  report["trials"] = result.outcomes.size();
  report["incomplete"] = ordered_json::array();
  for (const auto& inc : result.incomplete) {
    report["incomplete"].push_back(
        {{"task_id", inc.task_id}, {"tier_id", inc.tier_id}, {"error", inc.error}});
  }
  write_json(dir / "collect_report.json", report);
  std::cout << "collected " << result.outcomes.size() << " trials over " << corpus.size()
            << " tasks";
  if (!result.incomplete.empty()) std::cout << " (" << result.incomplete.size() << " incomplete)";
  std::cout << "\n";
  return 0;
}

int cmd_label(const Globals& g, const std::string& profiles_flag, const std::string& corpus_flag) {
  std::optional<RunConfig> cfg;
  if (!g.config.empty()) cfg = load_config(g);
  auto corpus = load_corpus(pick(corpus_flag, cfg ? cfg->paths.corpus : fs::path{}, "corpus"));
  auto profiles_path = pick(profiles_flag, cfg ? cfg->paths.profiles : fs::path{}, "profiles");

  std::map<std::string, SuccessProfile> profiles;
  for (const auto& line : parse_jsonl(read_file(profiles_path), profiles_path.string())) {
    auto p = SuccessProfile::from_json(line.value);
    p.validate(p.counts.size());
    profiles.emplace(p.task_id, std::move(p));
  }
  MappingTable table = cfg ? cfg->mapping : MappingTable::default_five_trial();
  auto result = label_corpus(corpus, profiles, table);

  const auto dir = out_dir(g, cfg);
  std::vector<ordered_json> rows;
  for (const auto& r : result.records) rows.push_back(r.to_json());
  write_file_atomic(dir / "labeled.jsonl", to_jsonl(rows));
  write_json(dir / "cleaning_report.json", CleanResult{{}, result.cleaned}.report());
  if (!result.incomplete.empty()) {
    write_json(dir / "incomplete_report.json", {{"excluded", result.incomplete}});
  }
  std::cout << "labeled " << result.records.size() << " tasks, cleaned " << result.cleaned.size()
            << ", excluded " << result.incomplete.size() << " incomplete\n";
  return 0;
}

int cmd_export_finetune(const Globals& g, const std::string& labeled, double fraction) {
  auto records = read_labeled(read_file(labeled), labeled);
  if (records.empty()) throw Error(labeled + ": no labeled records");
  auto [train_idx, test_idx] = split_indices(records.size(), {fraction, g.seed.value_or(0)});
  std::vector<LabeledRecord> train;
  std::vector<LabeledRecord> test;
  for (auto i : train_idx) train.push_back(records[i]);
  for (auto i : test_idx) test.push_back(records[i]);

  const auto dir = out_dir(g);
  auto dump = [](const std::vector<LabeledRecord>& rs) {
    std::vector<ordered_json> rows;
    for (const auto& r : rs) rows.push_back(r.to_json());
    return to_jsonl(rows);
  };
  write_file_atomic(dir / "train.jsonl", dump(train));
  write_file_atomic(dir / "test.jsonl", dump(test));
  write_file_atomic(dir / "finetune_train.jsonl", export_finetune(train));
  write_file_atomic(dir / "finetune_test.jsonl", export_finetune(test));
  std::cout << "split " << records.size() << " -> " << train.size() << " train / " << test.size()
            << " test\n";
  return 0;
}

int cmd_eval_classifier(const Globals& g, const std::string& test_path,
                        const std::string& predictions_path) {
  auto truth = read_labeled(read_file(test_path), test_path);
  std::optional<RunConfig> cfg;
  if (!g.config.empty()) cfg = load_config(g);
  LevelScheme scheme = cfg ? cfg->scheme
                           : (truth.empty() ? LevelScheme::five_level()
                                            : LevelScheme::by_id(truth.front().scheme_id));

  std::unique_ptr<ClassifierAdapter> classifier;
  if (!predictions_path.empty()) {
    classifier = std::make_unique<ReplayClassifier>(
        ReplayClassifier::from_jsonl(read_file(predictions_path), predictions_path, scheme));
  } else if (cfg) {
    classifier = make_classifier(*cfg, open_replay(*cfg));
  } else {
    throw Error("either --predictions or --config with a classifier section is required");
  }

  std::vector<Prediction> predictions;
  std::vector<std::string> failures;
  for (const auto& r : truth) {
    Task t{r.task_id, r.prompt, std::nullopt, {"assert True"}, std::nullopt};
    try {
      predictions.push_back(classifier->predict(t));
    } catch (const ClassificationError& e) {
      failures.push_back(e.what());
    }
  }
  for (const auto& f : failures) std::cerr << "error: " << f << "\n";
  auto matrix = evaluate(truth, predictions, scheme);

  const auto dir = out_dir(g, cfg);
  std::vector<ordered_json> rows;
  for (const auto& p : predictions) rows.push_back(p.to_json());
  write_file_atomic(dir / "predictions.jsonl", to_jsonl(rows));
  write_json(dir / "eval_report.json", matrix.report());
  std::cout << "n=" << matrix.total() << " accuracy=" << matrix.accuracy()
            << " type_ii_rate=" << matrix.type_ii_rate() << "\n";
  return 0;
}

int cmd_route(const Globals& g, const std::string& corpus_flag, bool classifier_overhead) {
  auto cfg = load_config(g);
  auto corpus = load_corpus(pick(corpus_flag, cfg.paths.corpus, "corpus"));
  auto replay = open_replay(cfg);
  auto clients = make_clients(cfg, replay);
  auto verifier = make_verifier(cfg);
  auto classifier = make_classifier(cfg, replay);

  RouteOptions opts;
  opts.temperature = cfg.temperature;
  opts.max_tokens = cfg.max_tokens;
  opts.verify_timeout_ms = cfg.verify_timeout_ms;
  opts.concurrency = cfg.concurrency;
  auto batch = route_batch(corpus, cfg.routing_policy(), *classifier, *clients, cfg.tiers,
                           verifier.get(), opts);

  const auto dir = out_dir(g, cfg);
  std::vector<ordered_json> rows;
  for (const auto& r : batch.records) rows.push_back(r.to_json());
  write_file_atomic(dir / "route_log.jsonl", to_jsonl(rows));
  write_json(dir / "route_summary.json", batch.summary.to_json());
  for (const auto& f : batch.summary.failures) {
    std::cerr << "route failed for " << f.task_id << " (" << f.stage << "): " << f.message << "\n";
  }

  try {
    CostOptions copts;
    copts.include_classifier_overhead = classifier_overhead;
    auto report = compute_report(distribution_from_routes(batch.records, cfg.tiers), copts);
    write_json(dir / "cost_report.json", report.to_json());
    std::vector<std::string> ids;
    for (const auto& t : cfg.tiers.tiers()) ids.push_back(t.tier_id);
    std::cout << report.table(ids);
  } catch (const Error& e) {
    write_json(dir / "cost_report.json", {{"error", e.what()}});
    std::cerr << "cost report unavailable: " << e.what() << "\n";
  }
  std::cout << "routed " << batch.records.size() << " tasks, correctness "
            << batch.summary.correctness_rate << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complexity-labeled datasets and cost-aware routing across model tiers"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Seed for shuffling");
  app.add_option("--concurrency", g.concurrency, "Concurrent requests per tier")
      ->check(CLI::PositiveNumber);
  app.add_option("--replay", g.replay, "Replay store for replay backends");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs");

  std::string input, corpus, profiles, labeled, test, predictions;
  double fraction = 0.8;
  bool overhead = false;

  auto* ingest_cmd = app.add_subcommand("ingest", "Validate an MBPP-format corpus");
  ingest_cmd->add_option("input", input, "Line-delimited task records")->required();
  auto* collect_cmd = app.add_subcommand("collect", "Collect M-trial success profiles");
  collect_cmd->add_option("--corpus", corpus);
  auto* label_cmd = app.add_subcommand("label", "Clean and label profiles");
  label_cmd->add_option("--profiles", profiles);
  label_cmd->add_option("--corpus", corpus);
  auto* export_cmd = app.add_subcommand("export-finetune", "Split and export fine-tune data");
  export_cmd->add_option("--labeled", labeled)->required();
  export_cmd->add_option("--train-fraction", fraction)->check(CLI::Range(0.0, 1.0));
  auto* eval_cmd = app.add_subcommand("eval-classifier", "Evaluate a complexity classifier");
  eval_cmd->add_option("--test", test)->required();
  eval_cmd->add_option("--predictions", predictions, "Replayed predictions {task_id, level}");
  auto* route_cmd = app.add_subcommand("route", "Route tasks and report compute savings");
  route_cmd->add_option("--corpus", corpus);
  route_cmd->add_flag("--classifier-overhead", overhead,
                      "Charge one smallest-tier call per task for classification");

  for (auto* sub : {ingest_cmd, collect_cmd, label_cmd, export_cmd, eval_cmd, route_cmd}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) return cmd_ingest(g, input);
    if (*collect_cmd) return cmd_collect(g, corpus);
    if (*label_cmd) return cmd_label(g, profiles, corpus);
    if (*export_cmd) return cmd_export_finetune(g, labeled, fraction);
    if (*eval_cmd) return cmd_eval_classifier(g, test, predictions);
    if (*route_cmd) return cmd_route(g, corpus, overhead);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
