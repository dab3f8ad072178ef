#include "tierroute/corpus.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

namespace tierroute {

bool SuccessProfile::all_zero() const {
  return std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
}

void SuccessProfile::validate(std::size_t tier_count) const {
  if (trials < 1) throw Error("profile " + task_id + ": M must be >= 1");
  if (counts.size() != tier_count) {
    throw Error("profile " + task_id + ": expected " + std::to_string(tier_count) +
                " counts, got " + std::to_string(counts.size()));
  }
  for (int c : counts) {
    if (c < 0 || c > trials) {
      throw Error("profile " + task_id + ": count " + std::to_string(c) + " outside 0.." +
                  std::to_string(trials));
    }
  }
}

ordered_json SuccessProfile::to_json() const {
  return {{"task_id", task_id}, {"counts", counts}, {"M", trials}, {"complete", complete}};
}

SuccessProfile SuccessProfile::from_json(const json& j) {
  SuccessProfile p;
  p.task_id = j.at("task_id").get<std::string>();
  p.counts = j.at("counts").get<std::vector<int>>();
  p.trials = j.at("M").get<int>();
  p.complete = j.value("complete", true);
  return p;
}

Corpus::Corpus(std::vector<Task> tasks, std::string source_name)
    : tasks_(std::move(tasks)), source_name_(std::move(source_name)) {
  std::unordered_map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const auto& t = tasks_[i];
    if (t.task_id.empty()) throw Error("task #" + std::to_string(i) + " has an empty task_id");
    if (t.prompt.empty()) throw Error("task " + t.task_id + " has an empty prompt");
    if (t.assertions.empty()) throw Error("task " + t.task_id + " has no assertions");
    if (!seen.emplace(t.task_id, i).second) throw Error("duplicate task_id " + t.task_id);
  }
}

const Task* Corpus::find(std::string_view task_id) const {
  auto it = std::find_if(tasks_.begin(), tasks_.end(),
                         [&](const Task& t) { return t.task_id == task_id; });
  return it == tasks_.end() ? nullptr : &*it;
}

namespace {

// Returns an error message, or empty on success.
std::string parse_record(const ordered_json& row, Task& task) {
  if (!row.is_object()) return "record is not a JSON object";
  auto id = row.find("task_id");
  if (id == row.end()) return "missing task_id";
  if (id->is_string()) {
    task.task_id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    task.task_id = std::to_string(id->get<long long>());
  } else {
    return "task_id must be a string or integer";
  }
  if (task.task_id.empty()) return "empty task_id";

  auto text = row.find("text");
  if (text == row.end() || !text->is_string()) return "missing text";
  task.prompt = text->get<std::string>();
  if (task.prompt.empty()) return "empty text";

  if (auto code = row.find("code"); code != row.end() && !code->is_null()) {
    if (!code->is_string()) return "code must be a string";
    task.reference_code = code->get<std::string>();
  }

  auto tests = row.find("test_list");
  if (tests == row.end() || !tests->is_array()) return "missing test_list";
  for (const auto& a : *tests) {
    if (!a.is_string()) return "test_list entries must be strings";
    task.assertions.push_back(a.get<std::string>());
  }
  if (task.assertions.empty()) return "empty test_list";
  task.signature_hint = extract_signature_hint(task.assertions.front());
  return {};
}

bool is_canonical_integer(const std::string& s) {
  if (s.empty() || s.size() > 18) return false;
  if (s.size() > 1 && s[0] == '0') return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Unbiased draw from [0, bound) on top of mt19937_64, whose output sequence
// is fixed by the standard (unlike std::uniform_int_distribution).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

}  // namespace

IngestResult ingest(std::string_view source, std::string source_name) {
  IngestResult result;
  std::vector<Task> tasks;
  std::unordered_map<std::string, std::size_t> first_line;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool any_content = false;
  while (pos < source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    auto line = source.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    any_content = true;

    ordered_json row;
    try {
      row = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      result.rejected.push_back({line_no, "invalid JSON"});
      continue;
    }
    Task task;
    if (auto err = parse_record(row, task); !err.empty()) {
      result.rejected.push_back({line_no, err});
      continue;
    }
    auto [it, inserted] = first_line.emplace(task.task_id, line_no);
    if (!inserted) {
      throw Error(source_name + ": duplicate task_id " + task.task_id + " on lines " +
                  std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    tasks.push_back(std::move(task));
  }

  if (!any_content) throw Error(source_name + ": empty corpus");
  if (tasks.empty()) throw Error(source_name + ": empty corpus (no well-formed records)");
  result.corpus = Corpus(std::move(tasks), std::move(source_name));
  return result;
}

std::string save(const Corpus& corpus) {
  std::vector<ordered_json> rows;
  rows.reserve(corpus.size());
  for (const auto& t : corpus.tasks()) {
    ordered_json row;
    if (is_canonical_integer(t.task_id)) {
      row["task_id"] = std::stoll(t.task_id);
    } else {
      row["task_id"] = t.task_id;
    }
    row["text"] = t.prompt;
    row["code"] = t.reference_code ? ordered_json(*t.reference_code) : ordered_json(nullptr);
    row["test_list"] = t.assertions;
    rows.push_back(std::move(row));
  }
  return to_jsonl(rows);
}

ordered_json CleanResult::report() const {
  return {{"removed", removed}, {"reason", "all_zero_profile"}};
}

CleanResult clean(const Corpus& corpus, const std::map<std::string, SuccessProfile>& profiles) {
  CleanResult result;
  std::vector<Task> kept;
  std::vector<std::string> missing;
  for (const auto& t : corpus.tasks()) {
    auto it = profiles.find(t.task_id);
    if (it == profiles.end()) {
      missing.push_back(t.task_id);
      continue;
    }
    if (it->second.all_zero()) {
      result.removed.push_back(t.task_id);
    } else {
      kept.push_back(t);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing success profile for task";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }
  result.corpus = Corpus(std::move(kept), corpus.source_name());
  return result;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  if (n == 0) throw Error("cannot split an empty set");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[bounded(rng, i + 1)]);
  }
  auto train_n = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  train_n = std::min(train_n, n);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, const SplitSpec& spec) {
  if (corpus.empty()) throw Error("cannot split an empty corpus");
  auto [train_idx, test_idx] = split_indices(corpus.size(), spec);
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<Task> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(corpus.tasks()[i]);
    return Corpus(std::move(out), corpus.source_name());
  };
  return {pick(train_idx), pick(test_idx)};
}

}  // namespace tierroute
