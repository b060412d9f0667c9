#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vulnbench/corpus.hpp"
#include "vulnbench/diff.hpp"
#include "vulnbench/extract.hpp"

namespace vulnbench {

enum class FilterReason { None, ExcessiveSize, MissingCWE, AsymmetricFunction, EmptyBlock };

std::string filter_reason_name(FilterReason r);
FilterReason parse_filter_reason(const std::string& name);

struct FilterOutcome {
  std::string record_id;
  bool keep = false;
  FilterReason reason = FilterReason::None;  // None iff keep
  std::size_t measured_changed_lines = 0;
};

// How "more than 500 lines" is counted: the default sums added and deleted
// lines over the whole commit; the alternative takes the larger of the two.
enum class SizeRule { Sum, Max };

struct FilterConfig {
  std::size_t size_threshold = 500;
  SizeRule size_rule = SizeRule::Sum;
};

struct NoiseAssessment {
  std::string record_id;
  int score = 0;  // 0 (all essential) .. 100 (mostly unrelated)
  std::string reasoning;
  std::string scorer_model;
  std::string raw_output;
  bool retried = false;
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& which) : Error(which + " is empty") {}
};
struct MalformedNoiseResponse : Error {
  MalformedNoiseResponse() : Error("response has no NOISE_AMOUNT line") {}
};
struct OutOfRangeScore : Error {
  explicit OutOfRangeScore(long long v)
      : Error("noise score " + std::to_string(v) + " outside 0-100") {}
};
struct ScoringFailed : Error {
  ScoringFailed() : Error("noise scoring failed after one retry") {}
};

FilterOutcome heuristic_filter(const VulnRecord& record, const DiffSet& diff,
                               const AssembleResult& assembly,
                               const FilterConfig& config = {});

// Substitutes {commit_desc} and {commit_diff} into the noise template; every
// other byte of the template is preserved.
std::string build_noise_prompt(const std::string& commit_desc, const std::string& commit_diff,
                               const std::string& template_text);

// Reads the integer after the last NOISE_AMOUNT: (case-insensitive, optional
// trailing %) and the text after REASONING:. Out-of-range scores are errors,
// never silently clamped.
NoiseAssessment parse_noise_response(const std::string& text);

using CompletionFn = std::function<std::string(const std::string& prompt)>;

// Prompt -> model -> parse, with one retry carrying a format reminder.
// Gateway errors propagate; a second malformed reply raises ScoringFailed.
NoiseAssessment score_noise(const VulnRecord& record, const std::string& diff_text,
                            const CompletionFn& gateway, const std::string& template_text,
                            const std::string& scorer_model);

nlohmann::json filter_outcome_to_json(const FilterOutcome& o);
FilterOutcome filter_outcome_from_json(const nlohmann::json& j);
nlohmann::json noise_assessment_to_json(const NoiseAssessment& a);
NoiseAssessment noise_assessment_from_json(const nlohmann::json& j);

}  // namespace vulnbench
