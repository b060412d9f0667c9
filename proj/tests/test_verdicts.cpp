#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

#include "vulnbench/verdicts.hpp"

using namespace vulnbench;

namespace {

const std::string kJudgeTemplate =
    "Read the analysis below and restate its conclusion.\n\n{response}\n\n"
    "Reply with one line: LABEL: 0, 1, or 2.";

Verdict verdict_with_label(Label l, const std::string& raw = "raw analysis text") {
  Verdict v;
  v.label = l;
  v.raw_text = raw;
  return v;
}

}  // namespace

TEST_CASE("a baseline YES on the answer line reads as vulnerable") {
  Verdict v = parse_baseline("1. Vulnerability Present? YES\n2. CWE-119, CWE-787");
  CHECK(v.label == Label::Vulnerable);
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-119", "CWE-787"});
  CHECK(v.extraction_method == ExtractionMethod::Rule);
}

TEST_CASE("a baseline NO on the answer line reads as non-vulnerable") {
  Verdict v = parse_baseline("1. Vulnerability Present? NO\n2. N/A");
  CHECK(v.label == Label::NonVulnerable);
  CHECK(v.cwe_ids.empty());
}

TEST_CASE("the answer to the presence question outranks stray tokens") {
  // A trailing "no further issues" line must not flip a YES answer.
  Verdict v = parse_baseline(
      "Vulnerability Present? YES\n"
      "No further comment.\n");
  CHECK(v.label == Label::Vulnerable);
}

TEST_CASE("an echoed (YES or NO) format hint is not an answer") {
  Verdict v = parse_baseline("1. Vulnerability Present? (YES or NO)\n2. ...");
  CHECK(v.label == Label::NotSure);
}

TEST_CASE("line-leading answers work with list markers and punctuation") {
  CHECK(parse_baseline("1) YES").label == Label::Vulnerable);
  CHECK(parse_baseline("- no").label == Label::NonVulnerable);
  CHECK(parse_baseline("2. No.").label == Label::NonVulnerable);
  CHECK(parse_baseline("  YES, the code is unsafe").label == Label::Vulnerable);
}

TEST_CASE("conflicting or absent answers land on label 2") {
  CHECK(parse_baseline("Vulnerability Present? YES\nVulnerability Present? NO").label ==
        Label::NotSure);
  CHECK(parse_baseline("The code looks fine to me.").label == Label::NotSure);
  CHECK(parse_baseline("").label == Label::NotSure);
}

TEST_CASE("answer words embedded in larger words do not count") {
  CHECK(parse_baseline("Nothing suspicious here.").label == Label::NotSure);
  CHECK(parse_baseline("Yesterday's build was fine.").label == Label::NotSure);
}

TEST_CASE("CWE ids are collected case-insensitively, deduplicated, in order") {
  Verdict v = parse_baseline("YES\ncwe-787 then CWE-119 then CWE-787 again; CWE- alone");
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-787", "CWE-119"});
}

TEST_CASE("chain-of-thought replies decide from the final-decision step") {
  Verdict v = parse_structured(
      Strategy::CoT,
      "Step 1: The function copies data.\n"
      "Step 2: The length check is wrong.\n"
      "Step 3: Final Decision: the code is vulnerable (CWE-787).\n"
      "Step 4: Improvement suggestions: clamp the length.");
  CHECK(v.label == Label::Vulnerable);
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-787"});
}

TEST_CASE("text after the improvement step never leaks into the decision") {
  // The suggestion mentions a vulnerability, but the decision said no.
  Verdict v = parse_structured(
      Strategy::CoT,
      "Final Decision: no vulnerabilities identified.\n"
      "Improvement: consider hardening against CWE-120 buffer overflows anyway.");
  CHECK(v.label == Label::NonVulnerable);
}

TEST_CASE("a decisive section with no CWE falls back to ids from the whole reply") {
  Verdict v = parse_structured(Strategy::CoT,
                               "I first suspected CWE-79.\n"
                               "Final Decision: not vulnerable.");
  CHECK(v.label == Label::NonVulnerable);
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-79"});
}

TEST_CASE("a chain-of-thought reply without a final decision is label 2") {
  Verdict v = parse_structured(Strategy::CoT, "Step 1: looks odd.\nStep 2: hmm.");
  CHECK(v.label == Label::NotSure);
}

TEST_CASE("hedging inside the decisive section is label 2") {
  CHECK(parse_structured(Strategy::CoT,
                         "Final Decision: I cannot determine this without more context.")
            .label == Label::NotSure);
  CHECK(parse_structured(Strategy::Think,
                         "<vulnerability_assessment>uncertain; the callers are not shown."
                         "</vulnerability_assessment>")
            .label == Label::NotSure);
}

TEST_CASE("think replies decide from the vulnerability_assessment tag") {
  Verdict v = parse_structured(
      Strategy::Think,
      "<thinking>long deliberation...</thinking>\n"
      "<vulnerability_assessment>The code contains a vulnerability: CWE-125 out-of-bounds read."
      "</vulnerability_assessment>");
  CHECK(v.label == Label::Vulnerable);
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-125"});
}

TEST_CASE("an unclosed assessment tag runs to the end of the reply") {
  Verdict v = parse_structured(Strategy::Think,
                               "<vulnerability_assessment>No security issue found in this code");
  CHECK(v.label == Label::NonVulnerable);
}

TEST_CASE("the last assessment region wins when a model restarts its answer") {
  Verdict v = parse_structured(
      Strategy::Think,
      "<vulnerability_assessment>the code is vulnerable</vulnerability_assessment>\n"
      "Wait, on reflection:\n"
      "<vulnerability_assessment>not vulnerable after all</vulnerability_assessment>");
  CHECK(v.label == Label::NonVulnerable);
}

TEST_CASE("think-and-verify replies parse assessment, confidence, and severity") {
  Verdict v = parse_structured(
      Strategy::ThinkVerify,
      "<assessment>The code is vulnerable to CWE-416 use-after-free. Severity rating: High"
      "</assessment>\n<confidence>85%</confidence>");
  CHECK(v.label == Label::Vulnerable);
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-416"});
  REQUIRE(v.confidence.has_value());
  CHECK(*v.confidence == 85);
  REQUIRE(v.severity.has_value());
  CHECK(*v.severity == "High");
}

TEST_CASE("confidence accepts a percentage, a labeled score, or a bare number") {
  auto conf = [](const std::string& inner) {
    return parse_structured(Strategy::ThinkVerify,
                            "<assessment>not vulnerable</assessment><confidence>" + inner +
                                "</confidence>")
        .confidence;
  };
  CHECK(conf("85%") == 85);
  CHECK(conf("I rate my confidence score: 72 out of 100") == 72);
  CHECK(conf("90") == 90);
  CHECK(conf("around 60 %") == 60);
  CHECK_FALSE(conf("very high").has_value());
  CHECK_FALSE(conf("150").has_value());
}

TEST_CASE("severity values shed the rating noun and trailing punctuation") {
  auto sev = [](const std::string& section) {
    return parse_structured(Strategy::ThinkVerify,
                            "<assessment>vulnerability found. " + section + "</assessment>")
        .severity;
  };
  CHECK(sev("Severity: medium.") == "medium");
  CHECK(sev("Severity rating - Critical") == "Critical");
  CHECK_FALSE(sev("no rating given").has_value());
}

TEST_CASE("a think-and-verify reply without tags is label 2 with no confidence") {
  Verdict v = parse_structured(Strategy::ThinkVerify, "It might be bad. CWE-20 perhaps.");
  CHECK(v.label == Label::NotSure);
  CHECK(v.cwe_ids == std::vector<std::string>{"CWE-20"});
  CHECK_FALSE(v.confidence.has_value());
  CHECK_FALSE(v.severity.has_value());
}

TEST_CASE("parse_response dispatches on strategy") {
  CHECK(parse_response(Strategy::Baseline, "YES").label == Label::Vulnerable);
  CHECK(parse_response(Strategy::Baseline, "<assessment>not vulnerable</assessment>").label ==
        Label::NotSure);  // baseline ignores tags
  CHECK(parse_response(Strategy::ThinkVerify, "<assessment>not vulnerable</assessment>").label ==
        Label::NonVulnerable);
}

TEST_CASE("every parser is total over adversarial garbage") {
  const std::vector<std::string> pool = {
      "yes",          "NO",       "YES.",      "<assessment>", "</assessment>",
      "<vulnerability_assessment>", "</vulnerability_assessment>", "<confidence>",
      "</confidence>", "CWE-",    "CWE-119",   "final decision", "Improvement",
      "not sure",     "vulnerability present?", "(YES or NO)",   "severity: high",
      "%",            "42",       "\n",        "  ",            "\t",
      "is vulnerable", "no vulnerabilities",    "LABEL: 1",      "\xc3\xa9\xf0\x9f",
      "<",            ">",        ":",          "....",         "}{"};
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    int n = static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) text += pool[rng() % pool.size()];
    for (Strategy s : {Strategy::Baseline, Strategy::CoT, Strategy::Think,
                       Strategy::ThinkVerify}) {
      Verdict v;
      CHECK_NOTHROW(v = parse_response(s, text));
      CHECK((v.label == Label::NonVulnerable || v.label == Label::Vulnerable ||
             v.label == Label::NotSure));
      CHECK(v.raw_text == text);
    }
  }
}

TEST_CASE("decisive rule labels skip the judge entirely") {
  int calls = 0;
  CompletionFn fn = [&](const std::string&) {
    ++calls;
    return std::string("LABEL: 2");
  };
  for (Label l : {Label::NonVulnerable, Label::Vulnerable}) {
    Verdict out = judge_extract(verdict_with_label(l), fn, kJudgeTemplate);
    CHECK(out.label == l);
    CHECK(out.extraction_method == ExtractionMethod::Rule);
    CHECK(out.judge_raw.empty());
  }
  CHECK(calls == 0);
}

TEST_CASE("a label-2 verdict escalates to the judge with the raw reply inlined") {
  std::string seen_prompt;
  CompletionFn fn = [&](const std::string& prompt) {
    seen_prompt = prompt;
    return std::string("The analysis concludes the code is vulnerable.\nLABEL: 1");
  };
  Verdict in = verdict_with_label(Label::NotSure, "hedged analysis body");
  Verdict out = judge_extract(in, fn, kJudgeTemplate);
  CHECK(out.label == Label::Vulnerable);
  CHECK(out.extraction_method == ExtractionMethod::Judge);
  CHECK_FALSE(out.judge_failed);
  CHECK(out.judge_raw.find("LABEL: 1") != std::string::npos);
  CHECK(seen_prompt.find("hedged analysis body") != std::string::npos);
  CHECK(seen_prompt.find("{response}") == std::string::npos);
}

TEST_CASE("the judge label line must be clean to count") {
  auto run = [&](const std::string& reply) {
    CompletionFn fn = [&](const std::string&) { return reply; };
    return judge_extract(verdict_with_label(Label::NotSure), fn, kJudgeTemplate);
  };
  // An echo of the instruction format is not an answer.
  Verdict echo = run("LABEL: 0, 1, or 2.");
  CHECK(echo.judge_failed);
  CHECK(echo.label == Label::NotSure);

  CHECK(run("Label = 2.").label == Label::NotSure);
  CHECK_FALSE(run("Label = 2.").judge_failed);
  CHECK(run("label:0").label == Label::NonVulnerable);
  CHECK(run("LABEL: 1!").label == Label::Vulnerable);
  CHECK(run("LABEL: 0\nLABEL: 1").label == Label::Vulnerable);  // last clean line wins
  CHECK(run("LABEL: 3").judge_failed);
  CHECK(run("I think label one fits best.").judge_failed);
}

TEST_CASE("a judge template without the response slot is an error") {
  CompletionFn fn = [](const std::string&) { return std::string("LABEL: 0"); };
  CHECK_THROWS_AS(judge_extract(verdict_with_label(Label::NotSure), fn, "no slot here"), Error);
}

TEST_CASE("judge transport errors propagate to the caller") {
  CompletionFn fn = [](const std::string&) -> std::string {
    throw std::runtime_error("gateway down");
  };
  CHECK_THROWS_AS(judge_extract(verdict_with_label(Label::NotSure), fn, kJudgeTemplate),
                  std::runtime_error);
}

TEST_CASE("detection grading: label 1 is correct, label 0 incorrect, label 2 ambiguous") {
  Verdict v1 = verdict_with_label(Label::Vulnerable);
  Verdict v0 = verdict_with_label(Label::NonVulnerable);
  Verdict v2 = verdict_with_label(Label::NotSure);
  CHECK(grade(v1, Task::Detect, "CWE-119").grade == Grade::Correct);
  CHECK(grade(v0, Task::Detect, "CWE-119").grade == Grade::Incorrect);
  CHECK(grade(v2, Task::Detect, "CWE-119").grade == Grade::Ambiguous);
}

TEST_CASE("patch verification grading: label 0 is correct, label 1 incorrect") {
  Verdict v1 = verdict_with_label(Label::Vulnerable);
  Verdict v0 = verdict_with_label(Label::NonVulnerable);
  Verdict v2 = verdict_with_label(Label::NotSure);
  CHECK(grade(v0, Task::PatchVerify, "CWE-119").grade == Grade::Correct);
  CHECK(grade(v1, Task::PatchVerify, "CWE-119").grade == Grade::Incorrect);
  CHECK(grade(v2, Task::PatchVerify, "CWE-119").grade == Grade::Ambiguous);
}

TEST_CASE("cwe-match grading also requires naming the true CWE") {
  Verdict hit = verdict_with_label(Label::Vulnerable);
  hit.cwe_ids = {"CWE-787", "CWE-119"};
  Verdict miss = verdict_with_label(Label::Vulnerable);
  miss.cwe_ids = {"CWE-79"};
  Verdict none = verdict_with_label(Label::Vulnerable);

  CHECK(grade(hit, Task::Detect, "CWE-119", GradingMode::CweMatch).grade == Grade::Correct);
  CHECK(grade(miss, Task::Detect, "CWE-119", GradingMode::CweMatch).grade == Grade::Incorrect);
  CHECK(grade(none, Task::Detect, "CWE-119", GradingMode::CweMatch).grade == Grade::Incorrect);
  // The stricter mode never upgrades a wrong binary answer.
  Verdict v0 = verdict_with_label(Label::NonVulnerable);
  CHECK(grade(v0, Task::Detect, "CWE-119", GradingMode::CweMatch).grade == Grade::Incorrect);
  // Patch verification is unaffected by the mode.
  CHECK(grade(v0, Task::PatchVerify, "CWE-119", GradingMode::CweMatch).grade == Grade::Correct);
  CHECK(grade(v0, Task::PatchVerify, "CWE-119", GradingMode::CweMatch).mode ==
        GradingMode::CweMatch);
}

TEST_CASE("verdicts serialize and round-trip with and without optionals") {
  Verdict v;
  v.label = Label::Vulnerable;
  v.cwe_ids = {"CWE-416"};
  v.confidence = 80;
  v.severity = "High";
  v.extraction_method = ExtractionMethod::Judge;
  v.judge_failed = false;
  v.raw_text = "the reply";
  v.judge_raw = "LABEL: 1";
  Verdict back = verdict_from_json(verdict_to_json(v));
  CHECK(back.label == v.label);
  CHECK(back.cwe_ids == v.cwe_ids);
  CHECK(back.confidence == v.confidence);
  CHECK(back.severity == v.severity);
  CHECK(back.extraction_method == v.extraction_method);
  CHECK(back.judge_failed == v.judge_failed);
  CHECK(back.raw_text == v.raw_text);
  CHECK(back.judge_raw == v.judge_raw);

  Verdict bare = verdict_with_label(Label::NotSure, "x");
  Verdict bare_back = verdict_from_json(verdict_to_json(bare));
  CHECK(bare_back.label == Label::NotSure);
  CHECK_FALSE(bare_back.confidence.has_value());
  CHECK_FALSE(bare_back.severity.has_value());
  CHECK(bare_back.judge_raw.empty());
  CHECK(verdict_to_json(bare).contains("judge_raw") == false);
}

TEST_CASE("grade and method names round-trip") {
  for (Grade g : {Grade::Correct, Grade::Incorrect, Grade::Ambiguous})
    CHECK(parse_grade(grade_name(g)) == g);
  CHECK_THROWS_AS(parse_grade("right"), Error);
  CHECK(extraction_method_name(ExtractionMethod::Rule) == "rule");
  CHECK(extraction_method_name(ExtractionMethod::Judge) == "judge");
  CHECK(grading_mode_name(GradingMode::Binary) == "binary");
  CHECK(grading_mode_name(GradingMode::CweMatch) == "cwe_match");
}
