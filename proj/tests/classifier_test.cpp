#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "support/synthetic.h"
#include "tierroute/classifier.h"

using namespace tierroute;
using namespace tierroute::testing;

namespace {

std::vector<LabeledRecord> records_with_levels(const std::vector<int>& levels) {
  std::vector<LabeledRecord> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.push_back({"r" + std::to_string(i), "prompt", {5, 5, 5}, 5, levels[i], "five_level"});
  }
  return out;
}

std::vector<Prediction> predictions_for(const std::vector<LabeledRecord>& truth,
                                        const std::vector<int>& levels) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < truth.size(); ++i) out.push_back({truth[i].task_id, levels[i], "", "t"});
  return out;
}

// 36 records with levels cycling 1..5; the first eight predictions are off by
// one (down unless the truth is 1): truths 1,2,3,4,5,1,2,3 -> 2,1,2,3,4,2,1,2.
// Under-predictions by hand: positions 1,2,3,4,6,7 = 6.
struct ThirtySix {
  std::vector<LabeledRecord> truth = synthetic_labeled(36);
  std::vector<Prediction> predicted;
  ThirtySix() {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      int level = truth[i].level;
      if (i < 8) level = level > 1 ? level - 1 : level + 1;
      predicted.push_back({truth[i].task_id, level, std::to_string(level), "fixture"});
    }
  }
};

}  // namespace

TEST_CASE("fine-tune export format") {
  auto records = synthetic_labeled(3);
  auto examples = make_finetune_examples(records);
  REQUIRE(examples.size() == 3);
  CHECK(examples[1].prompt == records[1].prompt + "\n\n###\n\n");
  CHECK(examples[1].completion == " 2");

  auto text = export_finetune(records);
  CHECK(text == export_finetune(records));
  auto first = json::parse(text.substr(0, text.find('\n')));
  CHECK(first.size() == 2);
  CHECK(first["completion"] == " 1");

  records[0].level = 7;
  CHECK_THROWS_AS(make_finetune_examples(records), Error);
}

TEST_CASE("fine-tune export of 144 records round-trips") {
  auto records = synthetic_labeled(144);
  auto lines = parse_jsonl(export_finetune(records), "export");
  REQUIRE(lines.size() == 144);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& j = lines[i].value;
    CHECK(j["prompt"] == records[i].prompt + std::string(kFineTuneSeparator));
    const std::string completion = j["completion"];
    REQUIRE(completion.size() == 2);
    CHECK(completion[0] == ' ');
    CHECK(completion[1] - '0' == records[i].level);
  }
}

TEST_CASE("parse_level") {
  const auto five = LevelScheme::five_level();
  CHECK(parse_level(" 5", five) == 5);
  CHECK(parse_level("Level: 3", five) == 3);
  CHECK(parse_level("9 then 2", five) == 2);
  CHECK_THROWS_AS(parse_level("hard", five), ClassificationError);
  CHECK_THROWS_AS(parse_level("0", five), ClassificationError);
  CHECK(parse_level(" 0", LevelScheme::single_trial()) == 0);
  CHECK_THROWS_AS(parse_level(" 4", LevelScheme::single_trial()), ClassificationError);
}

TEST_CASE("replay classifier") {
  auto c = ReplayClassifier::from_jsonl("{\"task_id\":\"t7\",\"level\":3}\n", "pred.jsonl",
                                        LevelScheme::five_level());
  Task t7;
  t7.task_id = "t7";
  auto p = c.predict(t7);
  CHECK(p.predicted_level == 3);
  CHECK(p.source == "replay");
  Task t8;
  t8.task_id = "t8";
  CHECK_THROWS_AS(c.predict(t8), ClassificationError);
  CHECK_THROWS_AS(ReplayClassifier::from_jsonl("{\"task_id\":\"a\",\"level\":6}\n", "p",
                                               LevelScheme::five_level()),
                  Error);
}

TEST_CASE("prompt classifier asks for a single token") {
  Task t;
  t.task_id = "q";
  t.prompt = "Write a function to add two numbers.";
  auto replay = std::make_shared<ReplayBackend>(
      json{{"q/classifier/1", {{"raw_text", " 4"}}}, {"z/classifier/1", {{"raw_text", "unsure"}}}});
  auto clients = std::make_shared<TierClients>(RetryPolicy{}, [](std::chrono::milliseconds) {});
  clients->add("classifier", replay);
  PromptClassifier c(clients, LevelScheme::five_level(), {});
  CHECK(c.render(t) == t.prompt + "\n\n###\n\n");
  auto p = c.predict(t);
  CHECK(p.predicted_level == 4);
  CHECK(p.raw_model_output == " 4");
  t.task_id = "z";
  CHECK_THROWS_AS(c.predict(t), ClassificationError);

  PromptClassifier::Options opts;
  opts.instruction = level_instruction(LevelScheme::five_level());
  PromptClassifier instructed(clients, LevelScheme::five_level(), opts);
  CHECK(instructed.render(t).find(opts.instruction) == 0);
}

TEST_CASE("confusion matrix basics") {
  auto truth = records_with_levels({1, 2, 3});
  auto same = evaluate(truth, predictions_for(truth, {1, 2, 3}), LevelScheme::five_level());
  CHECK(same.accuracy() == 1.0);
  CHECK(same.offdiag_rate() == 0.0);
  CHECK(same.type_ii_rate() == 0.0);

  auto m = evaluate(truth, predictions_for(truth, {1, 1, 3}), LevelScheme::five_level());
  CHECK(m.accuracy() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m.type_ii_rate() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(m.count(2, 1) == 1);
  CHECK(m.recall(2) == 0.0);
  CHECK(m.precision(1) == 0.5);
  CHECK(std::isnan(m.recall(4)));
  CHECK(std::isnan(m.precision(5)));

  auto report = m.report();
  CHECK(report["n"] == 3);
  CHECK(report["matrix"].size() == 5);
  CHECK(report["per_level_recall"]["4"].is_null());

  auto partial = predictions_for(truth, {1, 1, 3});
  partial.erase(partial.begin());
  CHECK_THROWS_WITH_AS(evaluate(truth, partial, LevelScheme::five_level()),
                       doctest::Contains("r0"), Error);
}

TEST_CASE("36-task evaluation fixture") {
  ThirtySix f;
  auto m = evaluate(f.truth, f.predicted, LevelScheme::five_level());
  CHECK(m.total() == 36);
  CHECK(std::abs(m.accuracy() - 28.0 / 36.0) <= 1e-9);
  CHECK(std::abs(m.type_ii_rate() - 6.0 / 36.0) <= 1e-9);
  CHECK(std::abs(m.offdiag_rate() - 8.0 / 36.0) <= 1e-9);
  CHECK(m.row_sum(1) == 8);
  for (int level = 2; level <= 5; ++level) CHECK(m.row_sum(level) == 7);
}

TEST_CASE("evaluation invariants over random predictions") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> t_levels, p_levels;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      t_levels.push_back(1 + static_cast<int>(rng() % 5));
      p_levels.push_back(1 + static_cast<int>(rng() % 5));
    }
    auto truth = records_with_levels(t_levels);
    auto preds = predictions_for(truth, p_levels);
    auto m = evaluate(truth, preds, LevelScheme::five_level());

    long long under = 0;
    for (int i = 0; i < n; ++i) under += p_levels[i] < t_levels[i];
    CHECK(m.type_ii_rate() == doctest::Approx(static_cast<double>(under) / n));
    CHECK(m.accuracy() + m.offdiag_rate() == doctest::Approx(1.0));
    CHECK(m.type_ii_rate() <= m.offdiag_rate() + 1e-12);
    long long rows = 0;
    for (int level = 1; level <= 5; ++level) {
      rows += m.row_sum(level);
      CHECK(m.row_sum(level) == std::count(t_levels.begin(), t_levels.end(), level));
    }
    CHECK(rows == n);

    std::shuffle(preds.begin(), preds.end(), rng);
    auto shuffled = evaluate(truth, preds, LevelScheme::five_level());
    CHECK(shuffled.report() == m.report());
  }
}
