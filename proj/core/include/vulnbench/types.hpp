#pragma once

#include <stdexcept>
#include <string>

namespace vulnbench {

// The four zero-shot strategies under evaluation.
enum class Strategy { Baseline, CoT, Think, ThinkVerify };

// The two evaluation tasks: judge the vulnerable block, judge the patched block.
enum class Task { Detect, PatchVerify };

// Decision labels emitted by response parsing.
//   0 = non-vulnerable, 1 = vulnerable, 2 = not sure / format violation.
enum class Label { NonVulnerable = 0, Vulnerable = 1, NotSure = 2 };

enum class Granularity { G1, G2, G3 };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

std::string task_name(Task t);
Task parse_task(const std::string& name);

std::string granularity_name(Granularity g);
Granularity parse_granularity(const std::string& name);

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace vulnbench
