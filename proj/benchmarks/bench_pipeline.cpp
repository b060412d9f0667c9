// Microbenchmarks for the pipeline's hot paths: diff parsing and application,
// function carving, prompt rendering, response parsing, and hashing.
#include <string>

#include <benchmark/benchmark.h>

#include "vulnbench/carve.hpp"
#include "vulnbench/diff.hpp"
#include "vulnbench/prompting.hpp"
#include "vulnbench/util.hpp"
#include "vulnbench/verdicts.hpp"

using namespace vulnbench;

namespace {

// A synthetic C file of `functions` small functions, ~6 lines each.
std::string synthetic_source(int functions) {
  std::string src = "#include <stddef.h>\n\n";
  for (int i = 0; i < functions; ++i) {
    std::string n = std::to_string(i);
    src += "int handler_" + n + "(const char *buf, size_t len) {\n";
    src += "  size_t limit = len > " + n + " ? len - " + n + " : 0;\n";
    src += "  for (size_t j = 0; j < limit; ++j) {\n";
    src += "    if (buf[j] == '\\0') return (int)j;\n";
    src += "  }\n  return -1;\n}\n\n";
  }
  return src;
}

// One hunk editing the body of every `step`-th function.
std::string synthetic_patch(const std::string& source, int stride) {
  LineSplit split = split_lines(source);
  std::string diff = "diff --git a/gen.c b/gen.c\n--- a/gen.c\n+++ b/gen.c\n";
  for (std::size_t i = 0; i + 2 < split.lines.size(); ++i) {
    if (split.lines[i].rfind("  size_t limit", 0) != 0) continue;
    if ((i / 8) % static_cast<std::size_t>(stride) != 0) continue;
    diff += "@@ -" + std::to_string(i) + ",3 +" + std::to_string(i) + ",3 @@\n";
    diff += " " + split.lines[i - 1] + "\n";
    diff += "-" + split.lines[i] + "\n";
    diff += "+  size_t limit = len;  /* widened */\n";
    diff += " " + split.lines[i + 1] + "\n";
  }
  return diff;
}

void BM_ParseUnifiedDiff(benchmark::State& state) {
  std::string source = synthetic_source(static_cast<int>(state.range(0)));
  std::string patch = synthetic_patch(source, 2);
  for (auto _ : state) {
    DiffSet set = parse_unified_diff(patch);
    benchmark::DoNotOptimize(set);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(patch.size()));
}
BENCHMARK(BM_ParseUnifiedDiff)->Arg(16)->Arg(128);

void BM_ApplyHunks(benchmark::State& state) {
  std::string source = synthetic_source(static_cast<int>(state.range(0)));
  DiffSet set = parse_unified_diff(synthetic_patch(source, 2));
  for (auto _ : state) {
    std::string out = apply_hunks(source, set.files[0]);
    benchmark::DoNotOptimize(out);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(source.size()));
}
BENCHMARK(BM_ApplyHunks)->Arg(16)->Arg(128);

void BM_CarveFunctions(benchmark::State& state) {
  std::string source = synthetic_source(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    CarveResult r = carve_functions(source);
    benchmark::DoNotOptimize(r);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(source.size()));
}
BENCHMARK(BM_CarveFunctions)->Arg(16)->Arg(128)->Arg(1024);

void BM_SanitizeSource(benchmark::State& state) {
  std::string source = synthetic_source(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    std::string s = sanitize_source(source);
    benchmark::DoNotOptimize(s);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(source.size()));
}
BENCHMARK(BM_SanitizeSource)->Arg(128);

void BM_ParseBaselineVerdict(benchmark::State& state) {
  std::string reply =
      "The function copies len bytes without bounding the destination.\n"
      "This is CWE-787, an out-of-bounds write, reachable from parse_header.\n"
      "1. Is a vulnerability present? YES\n"
      "2. CWE-787\n";
  for (auto _ : state) {
    Verdict v = parse_response(Strategy::Baseline, reply);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_ParseBaselineVerdict);

void BM_ParseStructuredVerdict(benchmark::State& state) {
  std::string reply =
      "<security_analysis>The loop writes past the end when len == cap.</security_analysis>\n"
      "<vulnerability_assessment>The code is vulnerable: CWE-787.</vulnerability_assessment>\n"
      "<assessment>The code is vulnerable: CWE-787. Severity: High</assessment>\n"
      "<confidence>85%</confidence>\n";
  for (auto _ : state) {
    Verdict v = parse_response(Strategy::ThinkVerify, reply);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_ParseStructuredVerdict);

void BM_Sha256(benchmark::State& state) {
  std::string data = synthetic_source(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    std::string h = sha256_hex(data);
    benchmark::DoNotOptimize(h);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(data.size()));
}
BENCHMARK(BM_Sha256)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
