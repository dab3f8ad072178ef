#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tierroute/backends.h"
#include "tierroute/corpus.h"
#include "tierroute/labeling.h"

namespace tierroute {

inline constexpr std::string_view kFineTuneSeparator = "\n\n###\n\n";

struct Prediction {
  std::string task_id;
  int predicted_level = 0;
  std::string raw_model_output;
  std::string source;

  ordered_json to_json() const;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

/// Pluggable complexity predictor. Must tolerate concurrent calls.
class ClassifierAdapter {
 public:
  virtual ~ClassifierAdapter() = default;
  virtual Prediction predict(const Task& task) = 0;
  virtual std::string id() const = 0;
};

/// First digit in `raw` that lies in the scheme's range.
/// Throws ClassificationError when there is none.
int parse_level(std::string_view raw, const LevelScheme& scheme);

/// Reads predictions from line-delimited {task_id, level}.
class ReplayClassifier : public ClassifierAdapter {
 public:
  ReplayClassifier(std::map<std::string, int> levels, LevelScheme scheme);
  static ReplayClassifier from_jsonl(std::string_view text, std::string_view source,
                                     LevelScheme scheme);

  Prediction predict(const Task& task) override;
  std::string id() const override { return "replay"; }

 private:
  std::map<std::string, int> levels_;
  LevelScheme scheme_;
};

/// Asks a (fine-tuned) model for a single level token.
class PromptClassifier : public ClassifierAdapter {
 public:
  struct Options {
    std::string tier_id = "classifier";
    /// Prepended to the task text; empty for a fine-tuned model.
    std::string instruction;
    double temperature = 1.0;
  };

  PromptClassifier(std::shared_ptr<const TierClients> clients, LevelScheme scheme, Options options);

  Prediction predict(const Task& task) override;
  std::string id() const override { return "prompt:" + options_.tier_id; }

  std::string render(const Task& task) const;

 private:
  std::shared_ptr<const TierClients> clients_;
  LevelScheme scheme_;
  Options options_;
};

/// Instruction used to elicit a level from a model that was not fine-tuned.
std::string level_instruction(const LevelScheme& scheme);

struct FineTuneExample {
  std::string prompt;
  std::string completion;

  ordered_json to_json() const;
};

/// prompt = text + separator, completion = " " + level.
std::vector<FineTuneExample> make_finetune_examples(std::span<const LabeledRecord> records);
std::string export_finetune(std::span<const LabeledRecord> records);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(LevelScheme scheme);

  void add(int true_level, int predicted_level);

  const LevelScheme& scheme() const { return scheme_; }
  long long count(int true_level, int predicted_level) const;
  long long total() const { return total_; }
  long long row_sum(int true_level) const;

  double accuracy() const;
  double offdiag_rate() const;
  /// Share of predictions strictly below the true level (routed too low).
  double type_ii_rate() const;
  /// NaN when the level never occurs in the relevant margin.
  double recall(int level) const;
  double precision(int level) const;

  /// {levels, matrix, accuracy, per_level_recall, per_level_precision, type_ii_rate, n}
  ordered_json report() const;

 private:
  std::size_t index(int level) const;

  LevelScheme scheme_;
  std::vector<std::vector<long long>> counts_;
  long long total_ = 0;
};

/// Throws Error listing every test task without a prediction.
ConfusionMatrix evaluate(std::span<const LabeledRecord> truth,
                         std::span<const Prediction> predictions, const LevelScheme& scheme);

}  // namespace tierroute
