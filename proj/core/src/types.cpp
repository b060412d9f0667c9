#include "vulnbench/types.hpp"

namespace vulnbench {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::CoT: return "cot";
    case Strategy::Think: return "think";
    case Strategy::ThinkVerify: return "think_verify";
  }
  return "baseline";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "baseline") return Strategy::Baseline;
  if (name == "cot") return Strategy::CoT;
  if (name == "think") return Strategy::Think;
  if (name == "think_verify" || name == "think-verify") return Strategy::ThinkVerify;
  throw Error("unknown strategy: " + name);
}

std::string task_name(Task t) {
  return t == Task::Detect ? "detect" : "patch_verify";
}

Task parse_task(const std::string& name) {
  if (name == "detect") return Task::Detect;
  if (name == "patch_verify" || name == "patch-verify") return Task::PatchVerify;
  throw Error("unknown task: " + name);
}

std::string granularity_name(Granularity g) {
  switch (g) {
    case Granularity::G1: return "G1";
    case Granularity::G2: return "G2";
    case Granularity::G3: return "G3";
  }
  return "G1";
}

Granularity parse_granularity(const std::string& name) {
  if (name == "G1") return Granularity::G1;
  if (name == "G2") return Granularity::G2;
  if (name == "G3") return Granularity::G3;
  throw Error("unknown granularity: " + name);
}

}  // namespace vulnbench
