#include "vulnbench/prompting.hpp"

#include <array>

#include <nlohmann/json.hpp>

#include "vulnbench/util.hpp"

namespace vulnbench {

namespace {

constexpr std::array<std::string_view, 6> kTemplateFiles = {
    "baseline.txt", "cot.txt", "think.txt", "think_verify.txt", "noise.txt", "judge.txt"};

std::string template_file_for(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline.txt";
    case Strategy::CoT: return "cot.txt";
    case Strategy::Think: return "think.txt";
    case Strategy::ThinkVerify: return "think_verify.txt";
  }
  throw Error("unknown strategy");
}

}  // namespace

PromptLibrary::PromptLibrary(const std::filesystem::path& dir) {
  const std::string manifest_text = read_file((dir / "manifest.json").string());
  nlohmann::json manifest = nlohmann::json::parse(manifest_text);
  for (std::string_view file : kTemplateFiles) {
    std::string name(file);
    std::string text = read_file((dir / name).string());
    auto it = manifest.find(name);
    if (it == manifest.end()) throw Error("manifest.json has no entry for " + name);
    std::string expected = it->get<std::string>();
    std::string actual = sha256_hex(text);
    if (actual != expected) throw TemplateHashMismatch(name, expected, actual);
    texts_.emplace(std::move(name), std::move(text));
  }
}

const std::string& PromptLibrary::strategy_template(Strategy s) const {
  return texts_.at(template_file_for(s));
}

PromptInstance PromptLibrary::render_prompt(const std::string& record_id, Strategy strategy,
                                            const std::string& code_block,
                                            const std::string& target_cwe, Task task,
                                            bool cwe_targeted) const {
  if (code_block.empty()) throw EmptyCodeBlock();
  std::string text = strategy_template(strategy);
  if (cwe_targeted && strategy == Strategy::Baseline && !target_cwe.empty()) {
    std::size_t para = text.find("\n\n");
    if (para != std::string::npos)
      text.insert(para, "\n\nIn particular, determine whether a vulnerability of type " +
                            target_cwe + " is present.");
  }
  std::size_t slot = text.find(kCodeSlot);
  if (slot == std::string::npos) throw Error("template lacks the code slot");
  text.replace(slot, kCodeSlot.size(), code_block);

  PromptInstance out;
  out.record_id = record_id;
  out.strategy = strategy;
  out.task = task;
  out.rendered_text = std::move(text);
  out.target_cwe = target_cwe;
  return out;
}

}  // namespace vulnbench
