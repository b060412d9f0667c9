#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "vulnbench/types.hpp"

namespace vulnbench {

struct PromptInstance {
  std::string record_id;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  std::string rendered_text;
  std::string target_cwe;
};

struct EmptyCodeBlock : Error {
  EmptyCodeBlock() : Error("code block is empty") {}
};

struct TemplateHashMismatch : Error {
  TemplateHashMismatch(const std::string& file, const std::string& expected, const std::string& actual)
      : Error("template " + file + " hash mismatch: manifest says " + expected + ", file is " + actual) {}
};

// Loads the prompt templates from a directory and verifies each against the
// SHA-256 recorded in manifest.json, so prompt drift fails loudly instead of
// silently changing the experiment.
class PromptLibrary {
 public:
  static constexpr std::string_view kCodeSlot = "[Code block goes here]";

  explicit PromptLibrary(const std::filesystem::path& dir);

  const std::string& strategy_template(Strategy s) const;
  const std::string& noise_template() const { return texts_.at("noise.txt"); }
  const std::string& judge_template() const { return texts_.at("judge.txt"); }

  // Substitutes the code block into the strategy template. The same template
  // serves Detect and PatchVerify; only the code differs. When cwe_targeted
  // is set, the Baseline template gains one sentence naming the target CWE
  // after its first paragraph (ablation aid; off by default).
  PromptInstance render_prompt(const std::string& record_id, Strategy strategy,
                               const std::string& code_block, const std::string& target_cwe,
                               Task task, bool cwe_targeted = false) const;

 private:
  std::map<std::string, std::string> texts_;
};

}  // namespace vulnbench
