#include "tierroute/labeling.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace tierroute {

ComplexityLabel label(const SuccessProfile& profile, const MappingTable& table) {
  if (!profile.complete) throw Error("profile " + profile.task_id + " is incomplete");
  profile.validate(profile.counts.size());
  return {table.level_for(profile.counts), table.scheme_id()};
}

std::optional<ComplexityLabel> label_single_trial(const SuccessProfile& profile) {
  if (profile.trials != 1) {
    throw Error("single-trial labeling needs M = 1, profile " + profile.task_id + " has M = " +
                std::to_string(profile.trials));
  }
  for (std::size_t k = 0; k < profile.counts.size(); ++k) {
    if (profile.counts[k] == 1) return ComplexityLabel{static_cast<int>(k), "single_trial"};
  }
  return std::nullopt;
}

ordered_json TrialOutcome::to_json() const {
  return {{"task_id", task_id},
          {"tier_id", tier_id},
          {"trial_index", trial_index},
          {"verdict", verdict.to_json()},
          {"raw_output", raw_output},
          {"extracted_code", extracted_code},
          {"completion_tokens", completion_tokens}};
}

TrialOutcome TrialOutcome::from_json(const json& j) {
  TrialOutcome o;
  o.task_id = j.at("task_id").get<std::string>();
  o.tier_id = j.at("tier_id").get<std::string>();
  o.trial_index = j.at("trial_index").get<int>();
  o.verdict = Verdict::from_json(j.at("verdict"));
  o.raw_output = j.value("raw_output", std::string());
  o.extracted_code = j.value("extracted_code", std::string());
  o.completion_tokens = j.value("completion_tokens", 0);
  return o;
}

std::map<std::string, SuccessProfile> CollectionResult::profile_map() const {
  std::map<std::string, SuccessProfile> out;
  for (const auto& p : profiles) out.emplace(p.task_id, p);
  return out;
}

void parallel_for(std::size_t n, std::size_t limit, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::clamp<std::size_t>(limit, 1, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

CollectionResult collect_profiles(const Corpus& corpus, const TierSet& tiers,
                                  const TierClients& clients, Verifier& verifier,
                                  const CollectOptions& options) {
  if (options.trials < 1) throw Error("M must be >= 1");
  if (tiers.size() == 0) throw Error("no tiers configured");
  for (const auto& t : tiers.tiers()) {
    if (!clients.has(t.tier_id)) throw Error("no backend configured for tier " + t.tier_id);
  }

  const std::size_t n_tasks = corpus.size();
  const std::size_t n_tiers = tiers.size();
  struct PairResult {
    std::vector<TrialOutcome> outcomes;
    int passes = 0;
    std::optional<std::string> error;
  };
  std::vector<PairResult> pairs(n_tasks * n_tiers);

  auto run_pair = [&](std::size_t task_pos, std::size_t tier_pos) {
    const auto& task = corpus.tasks()[task_pos];
    const auto& tier = tiers.at(tier_pos);
    auto& slot = pairs[task_pos * n_tiers + tier_pos];
    const auto prompt = render_prompt(task, tier.prompt_profile);
    for (int trial = 1; trial <= options.trials; ++trial) {
      CompletionRequest req{tier.tier_id, task.task_id, trial, prompt, options.temperature,
                            options.max_tokens};
      CompletionResponse resp;
      try {
        resp = clients.complete(req);
      } catch (const BackendError& e) {
        slot.error = e.what();
        return;
      }
      TrialOutcome out;
      out.task_id = task.task_id;
      out.tier_id = tier.tier_id;
      out.trial_index = trial;
      out.raw_output = resp.text;
      out.extracted_code = extract_code(resp.text);
      out.completion_tokens = resp.completion_tokens;
      out.verdict = verifier.verify(
          {task.task_id, out.extracted_code, task.assertions, options.verify_timeout_ms});
      if (out.verdict.passed()) ++slot.passes;
      slot.outcomes.push_back(std::move(out));
    }
  };

  // Each tier gets its own bounded worker group so one slow tier cannot
  // starve the others.
  std::vector<std::exception_ptr> errors(n_tiers);
  std::vector<std::thread> tier_threads;
  for (std::size_t k = 0; k < n_tiers; ++k) {
    tier_threads.emplace_back([&, k] {
      try {
        parallel_for(n_tasks, options.concurrency_per_tier,
                     [&](std::size_t i) { run_pair(i, k); });
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : tier_threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CollectionResult result;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    const auto& task = corpus.tasks()[i];
    SuccessProfile profile{task.task_id, {}, options.trials, true};
    for (std::size_t k = 0; k < n_tiers; ++k) {
      auto& slot = pairs[i * n_tiers + k];
      profile.counts.push_back(slot.passes);
      if (slot.error) {
        profile.complete = false;
        result.incomplete.push_back({task.task_id, tiers.at(k).tier_id, *slot.error});
      }
      for (auto& o : slot.outcomes) result.outcomes.push_back(std::move(o));
    }
    result.profiles.push_back(std::move(profile));
  }
  return result;
}

std::map<std::string, std::vector<int>> recount(const std::vector<TrialOutcome>& outcomes,
                                                const TierSet& tiers) {
  std::map<std::string, std::vector<int>> out;
  for (const auto& o : outcomes) {
    auto& counts = out[o.task_id];
    counts.resize(tiers.size(), 0);
    if (o.verdict.passed()) ++counts[tiers.position(o.tier_id)];
  }
  return out;
}

ordered_json LabeledRecord::to_json() const {
  return {{"task_id", task_id}, {"prompt", prompt}, {"counts", counts},
          {"M", trials},        {"level", level},   {"scheme_id", scheme_id}};
}

LabeledRecord LabeledRecord::from_json(const json& j) {
  LabeledRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.counts = j.value("counts", std::vector<int>{});
  r.trials = j.value("M", 0);
  if (!j.contains("level") || j.at("level").is_null()) {
    throw Error("record " + r.task_id + " has no level");
  }
  r.level = j.at("level").get<int>();
  r.scheme_id = j.value("scheme_id", std::string("five_level"));
  return r;
}

std::vector<LabeledRecord> read_labeled(std::string_view text, std::string_view source) {
  std::vector<LabeledRecord> out;
  for (const auto& line : parse_jsonl(text, source)) {
    try {
      out.push_back(LabeledRecord::from_json(line.value));
    } catch (const std::exception& e) {
      throw Error(std::string(source) + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return out;
}

LabelingResult label_corpus(const Corpus& corpus,
                            const std::map<std::string, SuccessProfile>& profiles,
                            const MappingTable& table) {
  const bool single = table.scheme_id() == "single_trial";
  LabelingResult result;
  std::vector<Task> complete;
  for (const auto& task : corpus.tasks()) {
    auto it = profiles.find(task.task_id);
    if (it != profiles.end() && !it->second.complete) {
      result.incomplete.push_back(task.task_id);
    } else {
      complete.push_back(task);
    }
  }
  auto cleaned = clean(Corpus(std::move(complete), corpus.source_name()), profiles);
  result.cleaned = std::move(cleaned.removed);
  for (const auto& task : cleaned.corpus.tasks()) {
    const auto& profile = profiles.at(task.task_id);
    ComplexityLabel lab;
    if (single) {
      // Cleaning already removed the all-zero profiles that this scheme drops.
      lab = *label_single_trial(profile);
    } else {
      lab = label(profile, table);
    }
    result.records.push_back({task.task_id, task.prompt, profile.counts, profile.trials,
                              lab.level, lab.scheme_id});
  }
  return result;
}

}  // namespace tierroute
