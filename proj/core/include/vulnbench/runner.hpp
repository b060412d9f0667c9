#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnbench/corpus.hpp"
#include "vulnbench/extract.hpp"
#include "vulnbench/gateway.hpp"
#include "vulnbench/prompting.hpp"
#include "vulnbench/types.hpp"
#include "vulnbench/verdicts.hpp"

namespace vulnbench {

enum class TrialStatus { Done, SkippedContext, Error };

std::string trial_status_name(TrialStatus s);
TrialStatus parse_trial_status(const std::string& name);

// One grid cell's outcome. Keyed by (record, model, strategy, task, run_tag);
// the store holds at most one result per key.
struct EvalResult {
  std::string record_id;
  std::string model_id;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  std::optional<Verdict> verdict;       // present iff status == Done
  std::optional<GradeOutcome> outcome;  // present iff status == Done
  std::int64_t latency_ms = 0;
  TrialStatus status = TrialStatus::Done;
  std::string detail;  // skip/error explanation
  std::string timestamp;
  std::string run_tag;
};

nlohmann::json eval_result_to_json(const EvalResult& r);
EvalResult eval_result_from_json(const nlohmann::json& j);

struct StoreUnwritable : Error {
  explicit StoreUnwritable(const std::string& path) : Error("result store unwritable: " + path) {}
};
struct BadFraction : Error {
  explicit BadFraction(double f)
      : Error("sample fraction " + std::to_string(f) + " outside (0, 1]") {}
};

// Append-only JSON-lines store. On open, lines that do not parse (a crash
// mid-append leaves at most one) are moved to "<path>.quarantine" and the
// store is rewritten without them, so every kept line is a complete result.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path path);

  bool contains(const std::string& record_id, const std::string& model_id, Strategy strategy,
                Task task, const std::string& run_tag) const;
  void append(const EvalResult& result);

  const std::vector<EvalResult>& results() const { return results_; }
  const std::filesystem::path& path() const { return path_; }
  std::size_t quarantined_on_open() const { return quarantined_; }

  static std::vector<EvalResult> read_all(const std::filesystem::path& path);

 private:
  static std::string key_of(const std::string& record_id, const std::string& model_id,
                            Strategy strategy, Task task, const std::string& run_tag);
  std::filesystem::path path_;
  std::vector<EvalResult> results_;
  std::set<std::string> index_;
  std::size_t quarantined_ = 0;
};

struct RunInput {
  VulnRecord record;
  CodeBlockPair pair;
};

struct RunOptions {
  std::vector<Strategy> strategies{Strategy::Baseline, Strategy::CoT, Strategy::Think,
                                   Strategy::ThinkVerify};
  std::vector<Task> tasks{Task::Detect, Task::PatchVerify};
  std::string run_tag = "default";
  GradingMode grading = GradingMode::Binary;
  CompletionParams params;
  bool cwe_targeted = false;
  bool use_judge = false;
  std::optional<ModelProfile> judge_profile;  // required when use_judge
  int workers = 1;
};

// Fills every missing grid cell under the run tag: render, context-check,
// complete, parse (rule then optional judge), grade, append. Trial failures
// become Error results; only an unwritable store aborts. Returns the number
// of results appended. Cells iterate records outermost and models innermost
// so a partial run covers every model on a prefix of records.
std::size_t run_grid(const std::vector<RunInput>& inputs, const std::vector<ModelProfile>& profiles,
                     const PromptLibrary& prompts, const Gateway& gateway, ResultStore& store,
                     const RunOptions& options);

struct LeakageCounts {
  std::size_t pre_appended = 0;
  std::size_t post_appended = 0;
};

// Splits records at each profile's training cutoff and runs both halves
// under the run tags "pre_cutoff" and "post_cutoff".
LeakageCounts run_leakage_split(const std::vector<RunInput>& inputs,
                                const std::vector<ModelProfile>& profiles,
                                const PromptLibrary& prompts, const Gateway& gateway,
                                ResultStore& store, RunOptions options);

// Deterministic sample of ceil(fraction * N) record ids under the seed,
// returned in corpus order (for the manual noise-review workflow).
std::vector<std::string> sample_for_review(const std::vector<VulnRecord>& records, double fraction,
                                           std::uint64_t seed);

}  // namespace vulnbench
