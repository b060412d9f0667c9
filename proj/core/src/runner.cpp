#include "vulnbench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "vulnbench/util.hpp"

namespace vulnbench {

std::string trial_status_name(TrialStatus s) {
  switch (s) {
    case TrialStatus::Done: return "done";
    case TrialStatus::SkippedContext: return "skipped_context";
    case TrialStatus::Error: return "error";
  }
  return "error";
}

TrialStatus parse_trial_status(const std::string& name) {
  if (name == "done") return TrialStatus::Done;
  if (name == "skipped_context") return TrialStatus::SkippedContext;
  if (name == "error") return TrialStatus::Error;
  throw Error("unknown trial status: " + name);
}

nlohmann::json eval_result_to_json(const EvalResult& r) {
  nlohmann::json j{{"record_id", r.record_id},
                   {"model_id", r.model_id},
                   {"strategy", strategy_name(r.strategy)},
                   {"task", task_name(r.task)},
                   {"latency_ms", r.latency_ms},
                   {"status", trial_status_name(r.status)},
                   {"timestamp", r.timestamp},
                   {"run_tag", r.run_tag}};
  if (r.verdict) j["verdict"] = verdict_to_json(*r.verdict);
  if (r.outcome) {
    j["grade"] = grade_name(r.outcome->grade);
    j["grading_mode"] = grading_mode_name(r.outcome->mode);
  }
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

EvalResult eval_result_from_json(const nlohmann::json& j) {
  EvalResult r;
  r.record_id = j.at("record_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.strategy = parse_strategy(j.at("strategy").get<std::string>());
  r.task = parse_task(j.at("task").get<std::string>());
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  r.status = parse_trial_status(j.at("status").get<std::string>());
  r.timestamp = j.value("timestamp", "");
  r.run_tag = j.value("run_tag", "default");
  if (j.contains("verdict")) r.verdict = verdict_from_json(j["verdict"]);
  if (j.contains("grade")) {
    GradeOutcome o;
    o.grade = parse_grade(j["grade"].get<std::string>());
    o.mode = j.value("grading_mode", "binary") == "cwe_match" ? GradingMode::CweMatch
                                                              : GradingMode::Binary;
    r.outcome = o;
  }
  r.detail = j.value("detail", "");
  return r;
}

std::string ResultStore::key_of(const std::string& record_id, const std::string& model_id,
                                Strategy strategy, Task task, const std::string& run_tag) {
  return record_id + "\x1f" + model_id + "\x1f" + strategy_name(strategy) + "\x1f" +
         task_name(task) + "\x1f" + run_tag;
}

ResultStore::ResultStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::vector<std::string> good_lines;
  std::vector<std::string> bad_lines;
  if (std::filesystem::exists(path_)) {
    const std::string content = read_file(path_.string());
    std::size_t begin = 0;
    while (begin < content.size()) {
      std::size_t end = content.find('\n', begin);
      bool complete = end != std::string::npos;
      std::string line = content.substr(begin, (complete ? end : content.size()) - begin);
      begin = complete ? end + 1 : content.size();
      if (trim(line).empty()) continue;
      bool ok = complete;  // a line without its newline is a torn append
      if (ok) {
        try {
          results_.push_back(eval_result_from_json(nlohmann::json::parse(line)));
          const EvalResult& r = results_.back();
          index_.insert(key_of(r.record_id, r.model_id, r.strategy, r.task, r.run_tag));
        } catch (const std::exception&) {
          ok = false;
        }
      }
      (ok ? good_lines : bad_lines).push_back(std::move(line));
    }
  }
  quarantined_ = bad_lines.size();
  if (!bad_lines.empty()) {
    std::ofstream quarantine(path_.string() + ".quarantine", std::ios::app);
    for (const std::string& line : bad_lines) quarantine << line << "\n";
    const std::filesystem::path tmp = path_.string() + ".tmp";
    {
      std::ofstream rewritten(tmp, std::ios::trunc);
      if (!rewritten) throw StoreUnwritable(path_.string());
      for (const std::string& line : good_lines) rewritten << line << "\n";
    }
    std::filesystem::rename(tmp, path_);
  }
  // Probe writability up front so the grid fails before any network work.
  std::ofstream probe(path_, std::ios::app);
  if (!probe) throw StoreUnwritable(path_.string());
}

bool ResultStore::contains(const std::string& record_id, const std::string& model_id,
                           Strategy strategy, Task task, const std::string& run_tag) const {
  return index_.count(key_of(record_id, model_id, strategy, task, run_tag)) > 0;
}

void ResultStore::append(const EvalResult& result) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw StoreUnwritable(path_.string());
  out << eval_result_to_json(result).dump() << "\n";
  out.flush();
  if (!out) throw StoreUnwritable(path_.string());
  results_.push_back(result);
  index_.insert(key_of(result.record_id, result.model_id, result.strategy, result.task, result.run_tag));
}

std::vector<EvalResult> ResultStore::read_all(const std::filesystem::path& path) {
  std::vector<EvalResult> out;
  const std::string content = read_file(path.string());
  for (const std::string& line : split_lines(content).lines) {
    if (trim(line).empty()) continue;
    out.push_back(eval_result_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

namespace {

struct Cell {
  const RunInput* input;
  const ModelProfile* profile;
  Strategy strategy;
  Task task;
};

EvalResult run_cell(const Cell& cell, const PromptLibrary& prompts, const Gateway& gateway,
                    const RunOptions& options) {
  const VulnRecord& record = cell.input->record;
  const CodeBlockPair& pair = cell.input->pair;

  EvalResult result;
  result.record_id = record.record_id;
  result.model_id = cell.profile->model_id;
  result.strategy = cell.strategy;
  result.task = cell.task;
  result.run_tag = options.run_tag;
  result.timestamp = utc_timestamp();

  const std::string& block =
      cell.task == Task::Detect ? pair.vulnerable_text : pair.patched_text;
  PromptInstance prompt = prompts.render_prompt(record.record_id, cell.strategy, block,
                                                record.cwe_id, cell.task, options.cwe_targeted);

  if (!fits_context(*cell.profile, prompt.rendered_text)) {
    result.status = TrialStatus::SkippedContext;
    result.detail = "prompt estimated at " + std::to_string(estimate_tokens(prompt.rendered_text)) +
                    " tokens + " + std::to_string(cell.profile->max_output_tokens) +
                    " output exceeds " + std::to_string(cell.profile->context_tokens);
    return result;
  }

  Completion completion;
  try {
    completion = gateway.complete(*cell.profile, prompt.rendered_text, options.params);
  } catch (const std::exception& e) {
    result.status = TrialStatus::Error;
    result.detail = e.what();
    return result;
  }

  Verdict verdict = parse_response(cell.strategy, completion.text);
  if (verdict.label == Label::NotSure && options.use_judge && options.judge_profile) {
    try {
      CompletionFn judge_fn = [&](const std::string& p) {
        return gateway.complete(*options.judge_profile, p, options.params).text;
      };
      verdict = judge_extract(verdict, judge_fn, prompts.judge_template());
    } catch (const std::exception& e) {
      verdict.judge_failed = true;  // rule label 2 stands
      result.detail = std::string("judge: ") + e.what();
    }
  }

  result.status = TrialStatus::Done;
  result.latency_ms = completion.latency_ms;
  result.outcome = grade(verdict, cell.task, record.cwe_id, options.grading);
  result.verdict = std::move(verdict);
  return result;
}

}  // namespace

std::size_t run_grid(const std::vector<RunInput>& inputs, const std::vector<ModelProfile>& profiles,
                     const PromptLibrary& prompts, const Gateway& gateway, ResultStore& store,
                     const RunOptions& options) {
  if (options.use_judge && !options.judge_profile)
    throw Error("judge extraction enabled but no judge profile configured");

  // Records outermost, models innermost.
  std::vector<Cell> pending;
  for (const RunInput& input : inputs)
    for (Strategy strategy : options.strategies)
      for (Task task : options.tasks)
        for (const ModelProfile& profile : profiles) {
          if (store.contains(input.record.record_id, profile.model_id, strategy, task,
                             options.run_tag))
            continue;
          pending.push_back(Cell{&input, &profile, strategy, task});
        }

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    for (const Cell& cell : pending) store.append(run_cell(cell, prompts, gateway, options));
    return pending.size();
  }

  std::atomic<std::size_t> next{0};
  std::mutex store_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= pending.size()) return;
        EvalResult result = run_cell(pending[i], prompts, gateway, options);
        std::lock_guard<std::mutex> lock(store_mutex);
        store.append(result);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return pending.size();
}

LeakageCounts run_leakage_split(const std::vector<RunInput>& inputs,
                                const std::vector<ModelProfile>& profiles,
                                const PromptLibrary& prompts, const Gateway& gateway,
                                ResultStore& store, RunOptions options) {
  LeakageCounts counts;
  for (const ModelProfile& profile : profiles) {
    if (!profile.cutoff_date) throw Error("model " + profile.model_id + " has no cutoff_date");
    std::vector<VulnRecord> records;
    records.reserve(inputs.size());
    for (const RunInput& input : inputs) records.push_back(input.record);
    auto [pre, post] =
        split_by_cutoff(records, CutoffPolicy{profile.model_id, *profile.cutoff_date});

    std::set<std::string> post_ids;
    for (const VulnRecord& r : post) post_ids.insert(r.record_id);
    std::vector<RunInput> pre_inputs, post_inputs;
    for (const RunInput& input : inputs)
      (post_ids.count(input.record.record_id) ? post_inputs : pre_inputs).push_back(input);

    std::vector<ModelProfile> just{profile};
    options.run_tag = "pre_cutoff";
    counts.pre_appended += run_grid(pre_inputs, just, prompts, gateway, store, options);
    options.run_tag = "post_cutoff";
    counts.post_appended += run_grid(post_inputs, just, prompts, gateway, store, options);
  }
  return counts;
}

std::vector<std::string> sample_for_review(const std::vector<VulnRecord>& records, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) throw BadFraction(fraction);
  const std::size_t n = records.size();
  std::size_t want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  want = std::min(want, n);

  // Partial Fisher-Yates with rng() % span: std::mt19937_64 is specified
  // bit-exactly by the standard, so the sample is stable across platforms
  // (distribution classes are not).
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < want; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::string> out;
  out.reserve(want);
  for (std::size_t i : chosen) out.push_back(records[i].record_id);
  return out;
}

}  // namespace vulnbench
