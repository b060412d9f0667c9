#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnbench/types.hpp"

namespace vulnbench {

enum class ExtractionMethod { Rule, Judge };
enum class GradingMode { Binary, CweMatch };
enum class Grade { Correct, Incorrect, Ambiguous };

std::string extraction_method_name(ExtractionMethod m);
std::string grading_mode_name(GradingMode m);
std::string grade_name(Grade g);
Grade parse_grade(const std::string& name);

struct Verdict {
  Label label = Label::NotSure;
  std::vector<std::string> cwe_ids;  // normalized "CWE-N", order of appearance
  std::optional<int> confidence;    // 0-100
  std::optional<std::string> severity;
  ExtractionMethod extraction_method = ExtractionMethod::Rule;
  bool judge_failed = false;
  std::string raw_text;   // the model's original response, verbatim
  std::string judge_raw;  // the judge's reply when escalation ran
};

struct GradeOutcome {
  Grade grade = Grade::Ambiguous;
  GradingMode mode = GradingMode::Binary;
};

// All parsers are total: arbitrary text yields a Verdict, never an exception.
// Unparseable or hedging responses land on label 2 (NotSure).

// Baseline replies: a YES/NO answering the presence question wins over
// stray tokens; both or neither present means label 2. CWE ids are collected
// from the whole reply.
Verdict parse_baseline(const std::string& text);

// CoT / Think / ThinkVerify replies: locate the decisive section ("Final
// Decision" step, <vulnerability_assessment>, or <assessment>) and decide
// from explicit statements inside it. ThinkVerify also yields confidence
// (from <confidence>) and a severity string when one is stated.
Verdict parse_structured(Strategy strategy, const std::string& text);

// Dispatches on strategy.
Verdict parse_response(Strategy strategy, const std::string& text);

using CompletionFn = std::function<std::string(const std::string& prompt)>;

// Escalates a label-2 verdict to a second model that restates the conclusion
// as "LABEL: 0|1|2". Labels 0/1 from rules are final and pass through
// untouched. Gateway errors propagate; an unparseable judge reply keeps
// label 2 and sets judge_failed.
Verdict judge_extract(const Verdict& rule_verdict, const CompletionFn& gateway,
                      const std::string& judge_template);

// Detect: correct iff label 1 (Binary) or label 1 naming the true CWE
// (CweMatch). PatchVerify: correct iff label 0. Label 2 is always Ambiguous.
GradeOutcome grade(const Verdict& verdict, Task task, const std::string& ground_truth_cwe,
                   GradingMode mode = GradingMode::Binary);

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

}  // namespace vulnbench
