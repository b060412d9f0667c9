#include "vulnbench/filtering.hpp"

#include <algorithm>
#include <cctype>

#include "vulnbench/util.hpp"

namespace vulnbench {

std::string filter_reason_name(FilterReason r) {
  switch (r) {
    case FilterReason::None: return "none";
    case FilterReason::ExcessiveSize: return "excessive_size";
    case FilterReason::MissingCWE: return "missing_cwe";
    case FilterReason::AsymmetricFunction: return "asymmetric_function";
    case FilterReason::EmptyBlock: return "empty_block";
  }
  return "none";
}

FilterReason parse_filter_reason(const std::string& name) {
  if (name == "none") return FilterReason::None;
  if (name == "excessive_size") return FilterReason::ExcessiveSize;
  if (name == "missing_cwe") return FilterReason::MissingCWE;
  if (name == "asymmetric_function") return FilterReason::AsymmetricFunction;
  if (name == "empty_block") return FilterReason::EmptyBlock;
  throw Error("unknown filter reason: " + name);
}

FilterOutcome heuristic_filter(const VulnRecord& record, const DiffSet& diff,
                               const AssembleResult& assembly, const FilterConfig& config) {
  std::size_t added = 0, deleted = 0;
  for (const FileDiff& fd : diff.files) {
    for (const Hunk& h : fd.hunks) {
      for (const HunkLine& line : h.lines) {
        if (line.tag == LineTag::Added) ++added;
        else if (line.tag == LineTag::Deleted) ++deleted;
      }
    }
  }
  FilterOutcome out;
  out.record_id = record.record_id;
  out.measured_changed_lines =
      config.size_rule == SizeRule::Sum ? added + deleted : std::max(added, deleted);

  if (out.measured_changed_lines > config.size_threshold) {
    out.reason = FilterReason::ExcessiveSize;
  } else if (trim(record.cwe_id).empty()) {
    out.reason = FilterReason::MissingCWE;
  } else if (assembly.empty.has_value()) {
    out.reason = assembly.empty->other_side_has_functions ? FilterReason::AsymmetricFunction
                                                          : FilterReason::EmptyBlock;
  } else {
    out.reason = FilterReason::None;
  }
  out.keep = out.reason == FilterReason::None;
  return out;
}

std::string build_noise_prompt(const std::string& commit_desc, const std::string& commit_diff,
                               const std::string& template_text) {
  if (commit_desc.empty()) throw EmptyInput("commit description");
  if (commit_diff.empty()) throw EmptyInput("commit diff");
  std::string out = template_text;
  auto substitute = [&](const std::string& slot, const std::string& value) {
    std::size_t at = out.find(slot);
    if (at == std::string::npos) throw Error("noise template lacks slot " + slot);
    out.replace(at, slot.size(), value);
  };
  substitute("{commit_desc}", commit_desc);
  substitute("{commit_diff}", commit_diff);
  return out;
}

NoiseAssessment parse_noise_response(const std::string& text) {
  static const std::string kToken = "noise_amount:";
  const std::string lowered = to_lower(text);
  std::size_t at = lowered.rfind(kToken);
  if (at == std::string::npos) throw MalformedNoiseResponse();
  std::size_t i = at + kToken.size();
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) negative = text[i] == '-', ++i;
  if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
    throw MalformedNoiseResponse();
  long long value = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
    value = value * 10 + (text[i++] - '0');
  if (negative) value = -value;
  if (value < 0 || value > 100) throw OutOfRangeScore(value);

  NoiseAssessment out;
  out.score = static_cast<int>(value);
  std::size_t reason_at = lowered.find("reasoning:", at);
  if (reason_at != std::string::npos) out.reasoning = trim(text.substr(reason_at + 10));
  return out;
}

NoiseAssessment score_noise(const VulnRecord& record, const std::string& diff_text,
                            const CompletionFn& gateway, const std::string& template_text,
                            const std::string& scorer_model) {
  const std::string prompt = build_noise_prompt(record.description, diff_text, template_text);
  std::string raw = gateway(prompt);
  bool retried = false;
  NoiseAssessment out;
  try {
    out = parse_noise_response(raw);
  } catch (const Error&) {
    retried = true;
    const std::string reminder =
        prompt +
        "\n\nReminder: the final lines of your reply must follow this exact format:\n\n"
        "NOISE_AMOUNT: X\nREASONING: [Your detailed explanation]\n";
    raw = gateway(reminder);
    try {
      out = parse_noise_response(raw);
    } catch (const Error&) {
      throw ScoringFailed();
    }
  }
  out.record_id = record.record_id;
  out.scorer_model = scorer_model;
  out.raw_output = raw;
  out.retried = retried;
  return out;
}

nlohmann::json filter_outcome_to_json(const FilterOutcome& o) {
  return nlohmann::json{{"record_id", o.record_id},
                        {"decision", o.keep ? "keep" : "reject"},
                        {"reason", filter_reason_name(o.reason)},
                        {"measured_changed_lines", o.measured_changed_lines}};
}

FilterOutcome filter_outcome_from_json(const nlohmann::json& j) {
  FilterOutcome o;
  o.record_id = j.at("record_id").get<std::string>();
  o.keep = j.at("decision").get<std::string>() == "keep";
  o.reason = parse_filter_reason(j.at("reason").get<std::string>());
  o.measured_changed_lines = j.at("measured_changed_lines").get<std::size_t>();
  return o;
}

nlohmann::json noise_assessment_to_json(const NoiseAssessment& a) {
  return nlohmann::json{{"record_id", a.record_id}, {"score", a.score},
                        {"reasoning", a.reasoning}, {"scorer_model", a.scorer_model},
                        {"raw_output", a.raw_output}, {"retried", a.retried}};
}

NoiseAssessment noise_assessment_from_json(const nlohmann::json& j) {
  NoiseAssessment a;
  a.record_id = j.at("record_id").get<std::string>();
  a.score = j.at("score").get<int>();
  a.reasoning = j.value("reasoning", "");
  a.scorer_model = j.value("scorer_model", "");
  a.raw_output = j.value("raw_output", "");
  a.retried = j.value("retried", false);
  return a;
}

}  // namespace vulnbench
