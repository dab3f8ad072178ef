#include "tierroute/classifier.h"

#include <cmath>
#include <limits>

namespace tierroute {

ordered_json Prediction::to_json() const {
  return {{"task_id", task_id},
          {"level", predicted_level},
          {"raw_model_output", raw_model_output},
          {"source", source}};
}

int parse_level(std::string_view raw, const LevelScheme& scheme) {
  for (char c : raw) {
    if (c >= '0' && c <= '9' && scheme.contains(c - '0')) return c - '0';
  }
  throw ClassificationError("unparseable classifier output '" + std::string(raw) + "'");
}

ReplayClassifier::ReplayClassifier(std::map<std::string, int> levels, LevelScheme scheme)
    : levels_(std::move(levels)), scheme_(std::move(scheme)) {
  for (const auto& [id, level] : levels_) {
    if (!scheme_.contains(level)) {
      throw Error("replayed prediction for " + id + " has level " + std::to_string(level) +
                  " outside " + scheme_.id);
    }
  }
}

ReplayClassifier ReplayClassifier::from_jsonl(std::string_view text, std::string_view source,
                                              LevelScheme scheme) {
  std::map<std::string, int> levels;
  for (const auto& line : parse_jsonl(text, source)) {
    try {
      levels[line.value.at("task_id").get<std::string>()] = line.value.at("level").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string(source) + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return ReplayClassifier(std::move(levels), std::move(scheme));
}

Prediction ReplayClassifier::predict(const Task& task) {
  auto it = levels_.find(task.task_id);
  if (it == levels_.end()) {
    throw ClassificationError("no recorded prediction for task " + task.task_id);
  }
  return {task.task_id, it->second, std::to_string(it->second), id()};
}

std::string level_instruction(const LevelScheme& scheme) {
  return "Rate the complexity of the following programming task with a single digit from " +
         std::to_string(scheme.min_level) + " (simplest) to " + std::to_string(scheme.max_level) +
         " (hardest). Answer with the digit only.";
}

PromptClassifier::PromptClassifier(std::shared_ptr<const TierClients> clients, LevelScheme scheme,
                                   Options options)
    : clients_(std::move(clients)), scheme_(std::move(scheme)), options_(std::move(options)) {
  if (!clients_ || !clients_->has(options_.tier_id)) {
    throw Error("no backend configured for classifier tier " + options_.tier_id);
  }
}

std::string PromptClassifier::render(const Task& task) const {
  std::string out;
  if (!options_.instruction.empty()) {
    out = options_.instruction;
    out += "\n\n";
  }
  out += task.prompt;
  out += kFineTuneSeparator;
  return out;
}

Prediction PromptClassifier::predict(const Task& task) {
  CompletionRequest req{options_.tier_id, task.task_id, 1, render(task), options_.temperature, 1};
  auto resp = clients_->complete(req);
  return {task.task_id, parse_level(resp.text, scheme_), resp.text, id()};
}

ordered_json FineTuneExample::to_json() const {
  return {{"prompt", prompt}, {"completion", completion}};
}

std::vector<FineTuneExample> make_finetune_examples(std::span<const LabeledRecord> records) {
  std::vector<FineTuneExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto scheme = LevelScheme::by_id(r.scheme_id);
    if (!scheme.contains(r.level)) {
      throw Error("record " + r.task_id + ": level " + std::to_string(r.level) + " outside " +
                  scheme.id);
    }
    out.push_back({r.prompt + std::string(kFineTuneSeparator), " " + std::to_string(r.level)});
  }
  return out;
}

std::string export_finetune(std::span<const LabeledRecord> records) {
  std::vector<ordered_json> rows;
  for (const auto& ex : make_finetune_examples(records)) rows.push_back(ex.to_json());
  return to_jsonl(rows);
}

ConfusionMatrix::ConfusionMatrix(LevelScheme scheme) : scheme_(std::move(scheme)) {
  const auto n = static_cast<std::size_t>(scheme_.level_count());
  counts_.assign(n, std::vector<long long>(n, 0));
}

std::size_t ConfusionMatrix::index(int level) const {
  if (!scheme_.contains(level)) {
    throw Error("level " + std::to_string(level) + " outside " + scheme_.id);
  }
  return static_cast<std::size_t>(level - scheme_.min_level);
}

void ConfusionMatrix::add(int true_level, int predicted_level) {
  ++counts_[index(true_level)][index(predicted_level)];
  ++total_;
}

long long ConfusionMatrix::count(int true_level, int predicted_level) const {
  return counts_[index(true_level)][index(predicted_level)];
}

long long ConfusionMatrix::row_sum(int true_level) const {
  long long s = 0;
  for (auto c : counts_[index(true_level)]) s += c;
  return s;
}

double ConfusionMatrix::accuracy() const {
  if (total_ == 0) return std::numeric_limits<double>::quiet_NaN();
  long long diag = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) diag += counts_[i][i];
  return static_cast<double>(diag) / static_cast<double>(total_);
}

double ConfusionMatrix::offdiag_rate() const { return 1.0 - accuracy(); }

double ConfusionMatrix::type_ii_rate() const {
  if (total_ == 0) return std::numeric_limits<double>::quiet_NaN();
  long long under = 0;
  for (std::size_t t = 0; t < counts_.size(); ++t) {
    for (std::size_t p = 0; p < t; ++p) under += counts_[t][p];
  }
  return static_cast<double>(under) / static_cast<double>(total_);
}

double ConfusionMatrix::recall(int level) const {
  auto row = row_sum(level);
  if (row == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(count(level, level)) / static_cast<double>(row);
}

double ConfusionMatrix::precision(int level) const {
  const auto p = index(level);
  long long col = 0;
  for (const auto& row : counts_) col += row[p];
  if (col == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(counts_[p][p]) / static_cast<double>(col);
}

namespace {

ordered_json number_or_null(double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); }

}  // namespace

ordered_json ConfusionMatrix::report() const {
  ordered_json levels = ordered_json::array();
  ordered_json recall_j = ordered_json::object();
  ordered_json precision_j = ordered_json::object();
  for (int l = scheme_.min_level; l <= scheme_.max_level; ++l) {
    levels.push_back(l);
    recall_j[std::to_string(l)] = number_or_null(recall(l));
    precision_j[std::to_string(l)] = number_or_null(precision(l));
  }
  ordered_json out;
  out["scheme_id"] = scheme_.id;
  out["levels"] = levels;
  out["matrix"] = counts_;
  out["accuracy"] = number_or_null(accuracy());
  out["per_level_recall"] = recall_j;
  out["per_level_precision"] = precision_j;
  out["type_ii_rate"] = number_or_null(type_ii_rate());
  out["n"] = total_;
  return out;
}

ConfusionMatrix evaluate(std::span<const LabeledRecord> truth,
                         std::span<const Prediction> predictions, const LevelScheme& scheme) {
  std::map<std::string_view, int> predicted;
  for (const auto& p : predictions) predicted[p.task_id] = p.predicted_level;
  std::vector<std::string> missing;
  for (const auto& r : truth) {
    if (!predicted.count(r.task_id)) missing.push_back(r.task_id);
  }
  if (!missing.empty()) {
    std::string msg = "missing predictions for " + std::to_string(missing.size()) + " task(s):";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }
  ConfusionMatrix m(scheme);
  for (const auto& r : truth) m.add(r.level, predicted.at(r.task_id));
  return m;
}

}  // namespace tierroute
