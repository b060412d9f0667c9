#include "vulnbench/verdicts.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "vulnbench/util.hpp"

namespace vulnbench {

std::string extraction_method_name(ExtractionMethod m) {
  return m == ExtractionMethod::Rule ? "rule" : "judge";
}

std::string grading_mode_name(GradingMode m) {
  return m == GradingMode::Binary ? "binary" : "cwe_match";
}

std::string grade_name(Grade g) {
  switch (g) {
    case Grade::Correct: return "correct";
    case Grade::Incorrect: return "incorrect";
    case Grade::Ambiguous: return "ambiguous";
  }
  return "ambiguous";
}

Grade parse_grade(const std::string& name) {
  if (name == "correct") return Grade::Correct;
  if (name == "incorrect") return Grade::Incorrect;
  if (name == "ambiguous") return Grade::Ambiguous;
  throw Error("unknown grade: " + name);
}

namespace {

std::vector<std::string> extract_cwes(const std::string& text) {
  std::vector<std::string> out;
  const std::string lowered = to_lower(text);
  std::size_t at = 0;
  while ((at = lowered.find("cwe-", at)) != std::string::npos) {
    std::size_t i = at + 4;
    std::string digits;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) digits += text[i++];
    if (!digits.empty()) {
      std::string id = "CWE-" + digits;
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    at = i;
  }
  return out;
}

bool word_at(const std::string& lowered, std::size_t pos, std::string_view word) {
  if (lowered.compare(pos, word.size(), word) != 0) return false;
  if (pos > 0 && std::isalnum(static_cast<unsigned char>(lowered[pos - 1]))) return false;
  std::size_t after = pos + word.size();
  if (after < lowered.size() && std::isalnum(static_cast<unsigned char>(lowered[after]))) return false;
  return true;
}

// First standalone yes/no word in [from, end) of the lowered text.
std::optional<bool> find_answer_word(const std::string& lowered, std::size_t from, std::size_t end) {
  for (std::size_t i = from; i < end && i < lowered.size(); ++i) {
    if (word_at(lowered, i, "yes")) return true;
    if (word_at(lowered, i, "no")) return false;
  }
  return std::nullopt;
}

std::string strip_format_echo(const std::string& lowered_line) {
  std::string out = lowered_line;
  for (std::string_view echo : {"(yes or no)", "yes or no"}) {
    std::size_t at;
    while ((at = out.find(echo)) != std::string::npos) out.erase(at, echo.size());
  }
  return out;
}

bool hedged(const std::string& lowered) {
  static const std::array<std::string_view, 14> kHedges = {
      "not sure",          "cannot determine",  "can't determine", "unable to determine",
      "insufficient context", "need more context", "more context",  "additional context",
      "uncertain",         "inconclusive",      "cannot conclude", "can't conclude",
      "unclear whether",   "unable to conclude"};
  for (std::string_view h : kHedges)
    if (lowered.find(h) != std::string::npos) return true;
  return false;
}

bool states_no_vulnerability(const std::string& lowered) {
  static const std::array<std::string_view, 16> kNegatives = {
      "no vulnerabilities", "no vulnerability",  "not vulnerable",      "non-vulnerable",
      "nonvulnerable",      "no security issue", "no security flaw",    "no issues identified",
      "no flaws",           "none identified",   "does not contain any vulnerab",
      "does not contain a vulnerab",             "free of vulnerabilities",
      "no exploitable",     "not exploitable",   "no cwe"};
  for (std::string_view n : kNegatives)
    if (lowered.find(n) != std::string::npos) return true;
  return false;
}

bool states_vulnerability(const std::string& lowered, const std::string& original) {
  if (!extract_cwes(original).empty()) return true;
  static const std::array<std::string_view, 13> kPositives = {
      "is vulnerable",          "are vulnerable",          "vulnerability present",
      "vulnerability exists",   "vulnerabilities exist",   "vulnerability found",
      "vulnerabilities found",  "vulnerability identified", "vulnerabilities identified",
      "vulnerability detected", "contains a vulnerability", "contains vulnerabilities",
      "is exploitable"};
  for (std::string_view p : kPositives)
    if (lowered.find(p) != std::string::npos) return true;
  return false;
}

Label decide_from_section(const std::string& section) {
  const std::string lowered = to_lower(section);
  if (hedged(lowered)) return Label::NotSure;
  if (states_no_vulnerability(lowered)) return Label::NonVulnerable;
  if (states_vulnerability(lowered, section)) return Label::Vulnerable;
  return Label::NotSure;
}

// Last <tag>...</tag> region; an unclosed tag runs to the end of the text.
std::optional<std::string> last_tagged_section(const std::string& text, const std::string& tag) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  std::size_t at = text.rfind(open);
  if (at == std::string::npos) return std::nullopt;
  std::size_t begin = at + open.size();
  std::size_t end = text.find(close, begin);
  if (end == std::string::npos) end = text.size();
  return text.substr(begin, end - begin);
}

std::optional<std::string> cot_final_decision(const std::string& text) {
  const std::string lowered = to_lower(text);
  std::size_t at = lowered.rfind("final decision");
  if (at == std::string::npos) return std::nullopt;
  std::size_t begin = at + std::string_view("final decision").size();
  std::size_t end = lowered.find("improvement", begin);
  if (end == std::string::npos) end = text.size();
  return text.substr(begin, end - begin);
}

std::optional<int> parse_confidence(const std::string& section) {
  const std::string lowered = to_lower(section);
  auto read_int_at = [&](std::size_t i) -> std::optional<long long> {
    if (i >= section.size() || !std::isdigit(static_cast<unsigned char>(section[i])))
      return std::nullopt;
    long long v = 0;
    while (i < section.size() && std::isdigit(static_cast<unsigned char>(section[i])))
      v = v * 10 + (section[i++] - '0');
    return v;
  };
  // Prefer an explicit percentage.
  for (std::size_t i = 0; i < section.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(section[i]))) continue;
    std::size_t j = i;
    while (j < section.size() && std::isdigit(static_cast<unsigned char>(section[j]))) ++j;
    std::size_t k = j;
    while (k < section.size() && section[k] == ' ') ++k;
    if (k < section.size() && section[k] == '%') {
      auto v = read_int_at(i);
      if (v && *v >= 0 && *v <= 100) return static_cast<int>(*v);
    }
    i = j;
  }
  // Then a number following "confidence" or "score".
  for (std::string_view kw : {std::string_view("confidence"), std::string_view("score")}) {
    std::size_t at = lowered.find(kw);
    if (at == std::string::npos) continue;
    for (std::size_t i = at + kw.size(); i < section.size(); ++i) {
      if (std::isdigit(static_cast<unsigned char>(section[i]))) {
        auto v = read_int_at(i);
        if (v && *v >= 0 && *v <= 100) return static_cast<int>(*v);
        break;
      }
      if (section[i] == '\n') break;
    }
  }
  // Last resort: the first in-range integer anywhere in the section.
  for (std::size_t i = 0; i < section.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(section[i]))) continue;
    if (i > 0 && std::isalnum(static_cast<unsigned char>(section[i - 1]))) continue;
    auto v = read_int_at(i);
    if (v && *v >= 0 && *v <= 100) return static_cast<int>(*v);
    while (i < section.size() && std::isdigit(static_cast<unsigned char>(section[i]))) ++i;
  }
  return std::nullopt;
}

std::optional<std::string> parse_severity(const std::string& section) {
  const std::string lowered = to_lower(section);
  std::size_t at = lowered.find("severity");
  if (at == std::string::npos) return std::nullopt;
  std::size_t i = at + std::string_view("severity").size();
  // Skip the noun and separators: "severity rating: High" -> "High".
  while (i < lowered.size()) {
    if (lowered.compare(i, 7, "ratings") == 0) { i += 7; continue; }
    if (lowered.compare(i, 6, "rating") == 0) { i += 6; continue; }
    if (lowered[i] == ' ' || lowered[i] == ':' || lowered[i] == '-' || lowered[i] == '=') { ++i; continue; }
    break;
  }
  std::size_t end = section.find('\n', i);
  if (end == std::string::npos) end = section.size();
  std::string value = trim(section.substr(i, end - i));
  while (!value.empty() && (value.back() == '.' || value.back() == ','))  value.pop_back();
  if (value.empty()) return std::nullopt;
  return value;
}

}  // namespace

Verdict parse_baseline(const std::string& text) {
  Verdict v;
  v.raw_text = text;
  v.cwe_ids = extract_cwes(text);

  bool question_yes = false, question_no = false;
  bool start_yes = false, start_no = false;
  for (const std::string& raw_line : split_lines(text).lines) {
    const std::string line = strip_format_echo(to_lower(raw_line));
    std::size_t q = line.find("vulnerability present");
    if (q == std::string::npos) q = line.find("vulnerabilities present");
    if (q != std::string::npos) {
      auto ans = find_answer_word(line, q, line.size());
      if (ans) (*ans ? question_yes : question_no) = true;
      continue;
    }
    // Leading list markers and punctuation do not hide an answer token.
    std::size_t i = 0;
    while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) ||
                               std::isdigit(static_cast<unsigned char>(line[i])) ||
                               line[i] == '.' || line[i] == ')' || line[i] == '-' ||
                               line[i] == '*' || line[i] == ':'))
      ++i;
    if (word_at(line, i, "yes")) start_yes = true;
    else if (word_at(line, i, "no")) start_no = true;
  }

  bool yes = question_yes, no = question_no;
  if (!yes && !no) yes = start_yes, no = start_no;
  if (yes && !no) v.label = Label::Vulnerable;
  else if (no && !yes) v.label = Label::NonVulnerable;
  else v.label = Label::NotSure;
  return v;
}

Verdict parse_structured(Strategy strategy, const std::string& text) {
  Verdict v;
  v.raw_text = text;

  std::optional<std::string> section;
  switch (strategy) {
    case Strategy::CoT:
      section = cot_final_decision(text);
      break;
    case Strategy::Think:
      section = last_tagged_section(text, "vulnerability_assessment");
      break;
    case Strategy::ThinkVerify:
      section = last_tagged_section(text, "assessment");
      break;
    case Strategy::Baseline:
      return parse_baseline(text);
  }

  if (section) {
    v.label = decide_from_section(*section);
    v.cwe_ids = extract_cwes(*section);
    if (v.cwe_ids.empty()) v.cwe_ids = extract_cwes(text);
  } else {
    v.label = Label::NotSure;
    v.cwe_ids = extract_cwes(text);
  }

  if (strategy == Strategy::ThinkVerify) {
    if (auto conf = last_tagged_section(text, "confidence")) v.confidence = parse_confidence(*conf);
    if (section) v.severity = parse_severity(*section);
  }
  return v;
}

Verdict parse_response(Strategy strategy, const std::string& text) {
  return strategy == Strategy::Baseline ? parse_baseline(text) : parse_structured(strategy, text);
}

namespace {

// Accepts only a whole line of the form "LABEL: <digit>" (case-insensitive,
// ':' or '=' optional, trailing punctuation allowed) so the judge echoing
// its own instructions ("LABEL: 0 or 1 or 2") cannot be misread.
std::optional<int> parse_judge_label(const std::string& reply) {
  std::optional<int> found;
  for (const std::string& raw_line : split_lines(reply).lines) {
    std::string line = trim(to_lower(raw_line));
    if (line.compare(0, 5, "label") != 0) continue;
    std::size_t i = 5;
    while (i < line.size() && (line[i] == ' ' || line[i] == ':' || line[i] == '=')) ++i;
    if (i >= line.size() || line[i] < '0' || line[i] > '2') continue;
    int digit = line[i] - '0';
    ++i;
    bool clean = true;
    for (; i < line.size(); ++i) {
      char c = line[i];
      if (c == ' ' || c == '.' || c == '!' || c == ')') continue;
      clean = false;
      break;
    }
    if (clean) found = digit;  // keep the last clean LABEL line
  }
  return found;
}

}  // namespace

Verdict judge_extract(const Verdict& rule_verdict, const CompletionFn& gateway,
                      const std::string& judge_template) {
  if (rule_verdict.label != Label::NotSure) return rule_verdict;

  std::string prompt = judge_template;
  std::size_t slot = prompt.find("{response}");
  if (slot == std::string::npos) throw Error("judge template lacks the {response} slot");
  prompt.replace(slot, std::string_view("{response}").size(), rule_verdict.raw_text);

  Verdict out = rule_verdict;
  out.extraction_method = ExtractionMethod::Judge;
  out.judge_raw = gateway(prompt);
  if (auto label = parse_judge_label(out.judge_raw)) {
    out.label = static_cast<Label>(*label);
  } else {
    out.judge_failed = true;  // label stays 2
  }
  return out;
}

GradeOutcome grade(const Verdict& verdict, Task task, const std::string& ground_truth_cwe,
                   GradingMode mode) {
  GradeOutcome out;
  out.mode = mode;
  if (verdict.label == Label::NotSure) {
    out.grade = Grade::Ambiguous;
    return out;
  }
  bool correct = false;
  if (task == Task::Detect) {
    correct = verdict.label == Label::Vulnerable;
    if (correct && mode == GradingMode::CweMatch) {
      correct = std::find(verdict.cwe_ids.begin(), verdict.cwe_ids.end(), ground_truth_cwe) !=
                verdict.cwe_ids.end();
    }
  } else {
    correct = verdict.label == Label::NonVulnerable;
  }
  out.grade = correct ? Grade::Correct : Grade::Incorrect;
  return out;
}

nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json j{{"label", static_cast<int>(v.label)},
                   {"cwe_ids", v.cwe_ids},
                   {"extraction_method", extraction_method_name(v.extraction_method)},
                   {"judge_failed", v.judge_failed},
                   {"raw_text", v.raw_text}};
  if (v.confidence) j["confidence"] = *v.confidence;
  if (v.severity) j["severity"] = *v.severity;
  if (!v.judge_raw.empty()) j["judge_raw"] = v.judge_raw;
  return j;
}

Verdict verdict_from_json(const nlohmann::json& j) {
  Verdict v;
  v.label = static_cast<Label>(j.at("label").get<int>());
  v.cwe_ids = j.value("cwe_ids", std::vector<std::string>{});
  if (j.contains("confidence") && !j["confidence"].is_null()) v.confidence = j["confidence"].get<int>();
  if (j.contains("severity") && !j["severity"].is_null()) v.severity = j["severity"].get<std::string>();
  v.extraction_method =
      j.value("extraction_method", "rule") == "judge" ? ExtractionMethod::Judge : ExtractionMethod::Rule;
  v.judge_failed = j.value("judge_failed", false);
  v.raw_text = j.value("raw_text", "");
  v.judge_raw = j.value("judge_raw", "");
  return v;
}

}  // namespace vulnbench
