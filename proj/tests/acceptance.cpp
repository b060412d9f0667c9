// Acceptance gate: one line per shipping criterion, [PASS]/[FAIL]/[SKIP],
// nonzero exit when any criterion fails. Each check carries its own
// independent oracle (hand-derived goldens, brute-force recounts, or a
// scripted mock endpoint) rather than re-running the unit suites.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vulnbench/analysis.hpp"
#include "vulnbench/carve.hpp"
#include "vulnbench/corpus.hpp"
#include "vulnbench/diff.hpp"
#include "vulnbench/extract.hpp"
#include "vulnbench/filtering.hpp"
#include "vulnbench/gateway.hpp"
#include "vulnbench/prompting.hpp"
#include "vulnbench/runner.hpp"
#include "vulnbench/util.hpp"
#include "vulnbench/verdicts.hpp"

using namespace vulnbench;
namespace fs = std::filesystem;

namespace {

struct Skip {
  std::string reason;
};

struct CheckFailure {
  std::string message;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw CheckFailure{message};
}

bool close_rel(double a, double b) {
  return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// ---------------------------------------------------------------------------
// Criterion 1: template fidelity.

void check_template_fidelity() {
  const fs::path dir = testsupport::prompts_dir();

  // Manifest hashes, recomputed here rather than trusted from the library.
  nlohmann::json manifest = nlohmann::json::parse(read_file((dir / "manifest.json").string()));
  require(manifest.is_object() && manifest.size() == 6,
          "manifest.json must list exactly six templates");
  for (const auto& [name, expected] : manifest.items()) {
    std::string actual = sha256_hex(read_file((dir / name).string()));
    require(actual == expected.get<std::string>(), "hash mismatch for " + name);
  }

  PromptLibrary lib(dir);  // re-verifies hashes on load
  const std::vector<std::pair<Strategy, std::string>> goldens = {
      {Strategy::Baseline, "golden/prompts/baseline.golden.txt"},
      {Strategy::CoT, "golden/prompts/cot.golden.txt"},
      {Strategy::Think, "golden/prompts/think.golden.txt"},
      {Strategy::ThinkVerify, "golden/prompts/think_verify.golden.txt"},
  };
  for (const auto& [strategy, golden] : goldens) {
    PromptInstance p =
        lib.render_prompt("acceptance", strategy, "SENTINEL_CODE_BLOCK", "CWE-119", Task::Detect);
    require(p.rendered_text == testsupport::read_fixture(golden),
            strategy_name(strategy) + " prompt differs from its golden rendering");
  }
  std::string noise = build_noise_prompt("SENTINEL_DESC", "SENTINEL_DIFF", lib.noise_template());
  require(noise == testsupport::read_fixture("golden/prompts/noise.golden.txt"),
          "noise prompt differs from its golden rendering");
}

// ---------------------------------------------------------------------------
// Criterion 2: filter thresholds and precedence.

std::string synthetic_diff(std::size_t added, std::size_t deleted, const std::string& file) {
  std::string d = "diff --git a/" + file + " b/" + file + "\n--- a/" + file + "\n+++ b/" + file +
                  "\n@@ -1," + std::to_string(deleted + 1) + " +1," + std::to_string(added + 1) +
                  " @@\n anchor\n";
  for (std::size_t i = 0; i < deleted; ++i) d += "-old" + std::to_string(i) + "\n";
  for (std::size_t i = 0; i < added; ++i) d += "+new" + std::to_string(i) + "\n";
  return d;
}

VulnRecord filter_record(const std::string& id, const std::string& cwe) {
  VulnRecord r;
  r.record_id = id;
  r.cve_id = "CVE-2020-1000";
  r.cwe_id = cwe;
  r.project = "demo";
  r.fix_commit = std::string(40, 'b');
  r.description = "fix";
  r.discovery_year = 2020;
  return r;
}

AssembleResult pair_assembly() {
  AssembleResult r;
  CodeBlockPair p;
  p.record_id = "x";
  p.vulnerable_text = "// File: f.c\nint f(void) {\n  return 0;\n}\n";
  p.patched_text = "// File: f.c\nint f(void) {\n  return 1;\n}\n";
  p.files_changed = 1;
  p.functions_changed = 1;
  r.pair = std::move(p);
  return r;
}

AssembleResult empty_assembly(Side side, bool other_has_functions) {
  AssembleResult r;
  r.empty = EmptyBlockInfo{side, other_has_functions};
  return r;
}

void check_filter_thresholds() {
  struct Commit {
    std::string name;
    VulnRecord record;
    std::string diff;
    AssembleResult assembly;
    FilterConfig config;
    bool keep;
    FilterReason reason;
  };
  const FilterConfig sum_rule;                         // 500, Sum
  const FilterConfig max_rule{500, SizeRule::Max};     // 500, Max
  const FilterConfig tight{10, SizeRule::Sum};

  std::vector<Commit> commits;
  commits.push_back({"small keep", filter_record("k1", "CWE-119"), synthetic_diff(3, 2, "f.c"),
                     pair_assembly(), sum_rule, true, FilterReason::None});
  commits.push_back({"boundary 500 kept", filter_record("k2", "CWE-787"),
                     synthetic_diff(250, 250, "f.c"), pair_assembly(), sum_rule, true,
                     FilterReason::None});
  commits.push_back({"501 rejected", filter_record("x1", "CWE-787"),
                     synthetic_diff(251, 250, "f.c"), pair_assembly(), sum_rule, false,
                     FilterReason::ExcessiveSize});
  commits.push_back({"multi-file sum rejected", filter_record("x2", "CWE-20"),
                     synthetic_diff(200, 0, "a.c") + synthetic_diff(200, 0, "b.c") +
                         synthetic_diff(101, 0, "c.c"),
                     pair_assembly(), sum_rule, false, FilterReason::ExcessiveSize});
  commits.push_back({"missing cwe", filter_record("x3", ""), synthetic_diff(3, 2, "f.c"),
                     pair_assembly(), sum_rule, false, FilterReason::MissingCWE});
  commits.push_back({"blank cwe", filter_record("x4", " \t "), synthetic_diff(3, 2, "f.c"),
                     pair_assembly(), sum_rule, false, FilterReason::MissingCWE});
  commits.push_back({"asymmetric function", filter_record("x5", "CWE-416"),
                     synthetic_diff(5, 0, "f.c"), empty_assembly(Side::Vulnerable, true), sum_rule,
                     false, FilterReason::AsymmetricFunction});
  commits.push_back({"empty block", filter_record("x6", "CWE-416"), synthetic_diff(0, 5, "f.c"),
                     empty_assembly(Side::Patched, false), sum_rule, false,
                     FilterReason::EmptyBlock});
  commits.push_back({"size outranks cwe and emptiness", filter_record("x7", ""),
                     synthetic_diff(501, 0, "f.c"), empty_assembly(Side::Vulnerable, true),
                     sum_rule, false, FilterReason::ExcessiveSize});
  commits.push_back({"cwe outranks emptiness", filter_record("x8", ""),
                     synthetic_diff(3, 2, "f.c"), empty_assembly(Side::Vulnerable, true), sum_rule,
                     false, FilterReason::MissingCWE});
  commits.push_back({"max rule keeps what sum rejects", filter_record("k3", "CWE-125"),
                     synthetic_diff(300, 280, "f.c"), pair_assembly(), max_rule, true,
                     FilterReason::None});
  commits.push_back({"threshold configurable", filter_record("x9", "CWE-125"),
                     synthetic_diff(6, 5, "f.c"), pair_assembly(), tight, false,
                     FilterReason::ExcessiveSize});
  require(commits.size() == 12, "filter suite must hold 12 crafted commits");

  std::set<FilterReason> seen;
  for (const Commit& c : commits) {
    DiffSet diff = parse_unified_diff(c.diff);
    FilterOutcome out = heuristic_filter(c.record, diff, c.assembly, c.config);
    require(out.keep == c.keep, c.name + ": unexpected keep/reject");
    require(out.reason == c.reason,
            c.name + ": expected reason " + filter_reason_name(c.reason) + ", got " +
                filter_reason_name(out.reason));
    seen.insert(out.reason);
  }
  for (FilterReason r : {FilterReason::None, FilterReason::ExcessiveSize, FilterReason::MissingCWE,
                         FilterReason::AsymmetricFunction, FilterReason::EmptyBlock})
    require(seen.count(r) == 1, "filter suite must exercise " + filter_reason_name(r));

  // The two sides of the 500 boundary, measured explicitly.
  DiffSet at = parse_unified_diff(synthetic_diff(250, 250, "f.c"));
  DiffSet over = parse_unified_diff(synthetic_diff(251, 250, "f.c"));
  require(heuristic_filter(filter_record("b1", "CWE-1"), at, pair_assembly(), {})
              .measured_changed_lines == 500,
          "boundary commit must measure exactly 500 changed lines");
  require(!heuristic_filter(filter_record("b2", "CWE-1"), over, pair_assembly(), {}).keep,
          "501 changed lines must reject");
}

// ---------------------------------------------------------------------------
// Criterion 3: extraction round-trip and per-function consistency.

struct FileEdit {
  std::vector<bool> deleted;                            // 1-based old line -> removed
  std::vector<std::vector<std::string>> insert_after;   // 0..n_old -> added lines
};

FileEdit edit_of(const FileDiff& fd, std::size_t n_old) {
  FileEdit e;
  e.deleted.assign(n_old + 1, false);
  e.insert_after.assign(n_old + 1, {});
  for (const Hunk& h : fd.hunks) {
    std::size_t last = h.old_len == 0 ? h.old_start : h.old_start - 1;
    std::size_t k = h.old_start;
    for (const HunkLine& l : h.lines) {
      if (l.tag == LineTag::Context) {
        last = k;
        ++k;
      } else if (l.tag == LineTag::Deleted) {
        e.deleted[k] = true;
        last = k;
        ++k;
      } else {
        e.insert_after[last].push_back(l.text);
      }
    }
  }
  return e;
}

// Applies only the edits that fall inside the function's old-line span.
// Insertions anchored after the last line count only when that line was
// itself replaced; insertions before the first line belong to the outside.
std::vector<std::string> rebuild_function(const std::vector<std::string>& old_lines,
                                          const FileEdit& e, std::size_t lo, std::size_t hi) {
  std::vector<std::string> out;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (!e.deleted[i]) out.push_back(old_lines[i - 1]);
    if (i < hi || e.deleted[i])
      for (const std::string& t : e.insert_after[i]) out.push_back(t);
  }
  return out;
}

std::map<std::string, std::vector<const FunctionSpan*>> group_spans(
    const std::vector<FunctionSpan>& spans) {
  std::map<std::string, std::vector<const FunctionSpan*>> groups;
  for (const FunctionSpan& s : spans) groups[s.qualified_name].push_back(&s);
  return groups;
}

void check_extraction_roundtrip() {
  const fs::path root = testsupport::fixtures_dir() / "roundtrip";
  std::size_t fixtures = 0, functions_checked = 0;

  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string fixture = entry.path().filename().string();
    ++fixtures;

    std::map<std::string, std::string> old_files, new_files;
    for (const char* side : {"old", "new"}) {
      fs::path dir = entry.path() / side;
      if (!fs::exists(dir)) continue;
      for (const auto& f : fs::recursive_directory_iterator(dir)) {
        if (!f.is_regular_file()) continue;
        auto& bucket = std::string(side) == "old" ? old_files : new_files;
        bucket[fs::relative(f.path(), dir).generic_string()] = read_file(f.path().string());
      }
    }

    DiffSet diff = parse_unified_diff(read_file((entry.path() / "change.diff").string()));
    for (const FileDiff& fd : diff.files) {
      if (fd.binary) continue;
      const bool has_old = fd.old_path != "/dev/null";
      const bool has_new = fd.new_path != "/dev/null";
      const std::string old_text = has_old ? old_files.at(fd.old_path) : std::string();
      const std::string new_text = has_new ? new_files.at(fd.new_path) : std::string();

      // Whole-file round-trip: hunks applied to the pre-image reproduce the
      // post-image byte for byte.
      std::string rebuilt = apply_hunks(old_text, fd);
      require(rebuilt == new_text,
              fixture + "/" + fd.display_path() + ": applying hunks does not reproduce post-image");

      if (!has_old || !has_new) continue;

      // Per-function consistency: carving the pre-image and applying only the
      // function's own hunk lines must equal the post-image's carved function.
      LineSplit old_split = split_lines(old_text);
      LineSplit new_split = split_lines(new_text);
      FileEdit edit = edit_of(fd, old_split.lines.size());
      CarveResult old_carved = carve_functions(old_text);
      CarveResult new_carved = carve_functions(new_text);
      auto old_groups = group_spans(old_carved.spans);
      auto new_groups = group_spans(new_carved.spans);
      for (const auto& [name, old_spans] : old_groups) {
        auto it = new_groups.find(name);
        if (it == new_groups.end()) continue;  // function removed: no counterpart
        const auto& new_spans = it->second;
        for (std::size_t i = 0; i < old_spans.size() && i < new_spans.size(); ++i) {
          std::vector<std::string> expected(
              new_split.lines.begin() + static_cast<std::ptrdiff_t>(new_spans[i]->start_line - 1),
              new_split.lines.begin() + static_cast<std::ptrdiff_t>(new_spans[i]->end_line));
          std::vector<std::string> got =
              rebuild_function(old_split.lines, edit, old_spans[i]->start_line,
                               old_spans[i]->end_line);
          require(got == expected, fixture + "/" + fd.display_path() + ": function " + name +
                                       " inconsistent between carving and restricted hunks");
          ++functions_checked;
        }
      }
    }
  }
  require(fixtures >= 20, "need at least 20 round-trip fixtures, found " +
                              std::to_string(fixtures));
  require(functions_checked >= 10, "per-function consistency covered too few functions");
}

// ---------------------------------------------------------------------------
// Criterion 4: granularity classification against brute-force recounts.

void check_granularity_oracle() {
  std::mt19937_64 rng(424242);
  const char* files[] = {"a.c", "b.c", "c.cc", "d.h"};
  const char* names[] = {"alpha", "beta", "gamma", "delta", "epsilon"};

  bool threw = false;
  try {
    classify_granularity(0, 0);
  } catch (const Unclassifiable&) {
    threw = true;
  }
  require(threw, "0 files / 0 functions must be unclassifiable");

  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<InventoryEntry> inventory;
    std::size_t entries = 1 + rng() % 6;
    for (std::size_t i = 0; i < entries; ++i) {
      InventoryEntry e;
      e.file = files[rng() % 4];
      e.function = names[rng() % 5];
      inventory.push_back(e);
    }

    // Brute-force recount straight from the raw entries.
    std::set<std::string> distinct_files;
    std::set<std::pair<std::string, std::string>> distinct_pairs;
    for (const InventoryEntry& e : inventory) {
      distinct_files.insert(e.file);
      distinct_pairs.insert({e.file, e.function});
    }
    Granularity expected = distinct_files.size() >= 2 ? Granularity::G3
                           : distinct_pairs.size() >= 2 ? Granularity::G2
                                                        : Granularity::G1;

    // One changed file per distinct inventory file feeds the stats counter.
    DiffSet diff;
    for (const std::string& f : distinct_files) {
      FileDiff fd;
      fd.old_path = f;
      fd.new_path = f;
      Hunk h;
      h.old_start = 1;
      h.old_len = 1;
      h.new_start = 1;
      h.new_len = 2;
      h.lines = {{LineTag::Context, "x", false}, {LineTag::Added, "y", false}};
      fd.hunks.push_back(h);
      diff.files.push_back(fd);
    }
    ChangeStats stats = change_stats(diff, inventory);
    require(stats.files_changed == distinct_files.size(),
            "files_changed disagrees with recount on trial " + std::to_string(trial));
    require(stats.functions_changed == distinct_pairs.size(),
            "functions_changed disagrees with recount on trial " + std::to_string(trial));
    require(classify_granularity(stats.files_changed, stats.functions_changed) == expected,
            "granularity disagrees with recount on trial " + std::to_string(trial));
  }
}

// ---------------------------------------------------------------------------
// Criterion 5: verdict corpus and totality fuzz.

void check_verdict_parsing() {
  struct Case {
    Strategy strategy;
    const char* text;
    Label expected;
  };
  const std::vector<Case> corpus = {
      // Baseline: clean yes, clean no, hedged/absent, malformed, mixed-signal.
      {Strategy::Baseline, "Is there a vulnerability present? Yes.", Label::Vulnerable},
      {Strategy::Baseline, "Is there a vulnerability present? No.", Label::NonVulnerable},
      {Strategy::Baseline, "I cannot determine this without the rest of the module.",
       Label::NotSure},
      {Strategy::Baseline, "Vulnerability present? (YES or NO)", Label::NotSure},
      {Strategy::Baseline, "YES\nIs a vulnerability present? No.", Label::NonVulnerable},
      {Strategy::Baseline, "1) YES, the buffer overflows.", Label::Vulnerable},
      {Strategy::Baseline, "- no", Label::NonVulnerable},
      {Strategy::Baseline, "YES\nNO", Label::NotSure},
      {Strategy::Baseline, "The answer is affirmative.", Label::NotSure},
      {Strategy::Baseline, "  Yes, CWE-787 applies here.", Label::Vulnerable},
      // CoT: decisions read from the text after the last "Final decision".
      {Strategy::CoT, "Step 1: read.\nFinal decision: the code is vulnerable to CWE-119.",
       Label::Vulnerable},
      {Strategy::CoT, "Final decision: no vulnerabilities detected.", Label::NonVulnerable},
      {Strategy::CoT, "Final decision: uncertain, the evidence is inconclusive.", Label::NotSure},
      {Strategy::CoT, "The code multiplies width by height with no checks.", Label::NotSure},
      {Strategy::CoT, "Final decision: vulnerable.\nWait.\nFinal decision: not vulnerable.",
       Label::NonVulnerable},
      {Strategy::CoT,
       "Final decision: the function is vulnerable (CWE-787).\n"
       "Improvement suggestions: rewrite it so it is not vulnerable.",
       Label::Vulnerable},
      {Strategy::CoT, "FINAL DECISION - vulnerability found in the length check.",
       Label::Vulnerable},
      {Strategy::CoT, "FINAL DECISION: The code is not vulnerable.", Label::NonVulnerable},
      {Strategy::CoT, "My final answer remains unclear.", Label::NotSure},
      {Strategy::CoT, "Final decision: a vulnerability exists in the loop bound.",
       Label::Vulnerable},
      // Think: decisions read from the last <vulnerability_assessment> region.
      {Strategy::Think,
       "<vulnerability_assessment>The arithmetic is vulnerable: CWE-131.</vulnerability_assessment>",
       Label::Vulnerable},
      {Strategy::Think,
       "<vulnerability_assessment>No vulnerabilities in this block.</vulnerability_assessment>",
       Label::NonVulnerable},
      {Strategy::Think,
       "<vulnerability_assessment>Unable to determine without the caller.</vulnerability_assessment>",
       Label::NotSure},
      {Strategy::Think, "The code looks fine to me.", Label::NotSure},
      {Strategy::Think,
       "<vulnerability_assessment>is vulnerable, CWE-79</vulnerability_assessment>\n"
       "<vulnerability_assessment>not vulnerable after all</vulnerability_assessment>",
       Label::NonVulnerable},
      {Strategy::Think, "<vulnerability_assessment>contains a vulnerability (CWE-125)",
       Label::Vulnerable},
      {Strategy::Think,
       "<vulnerability_assessment>The patched code is free of vulnerabilities.</vulnerability_assessment>",
       Label::NonVulnerable},
      {Strategy::Think, "CWE-119 might apply, but there is no assessment block here.",
       Label::NotSure},
      {Strategy::Think,
       "<vulnerability_assessment>It does not contain any vulnerability.</vulnerability_assessment>",
       Label::NonVulnerable},
      {Strategy::Think,
       "<vulnerability_assessment>Both branches are vulnerable.</vulnerability_assessment>",
       Label::Vulnerable},
      // Think & Verify: decisions read from the last <assessment> region.
      {Strategy::ThinkVerify,
       "<assessment>The code is vulnerable to CWE-416.</assessment>\n<confidence>88%</confidence>",
       Label::Vulnerable},
      {Strategy::ThinkVerify, "<assessment>No security issue remains.</assessment>",
       Label::NonVulnerable},
      {Strategy::ThinkVerify, "<assessment>Inconclusive; I would need more context.</assessment>",
       Label::NotSure},
      {Strategy::ThinkVerify, "I think the patch is fine.", Label::NotSure},
      {Strategy::ThinkVerify,
       "<assessment>vulnerable CWE-79</assessment>\n<assessment>not exploitable</assessment>",
       Label::NonVulnerable},
      {Strategy::ThinkVerify, "<assessment>vulnerability detected in memcpy</assessment>",
       Label::Vulnerable},
      {Strategy::ThinkVerify, "<assessment>possibly CWE-787 but I am not sure</assessment>",
       Label::NotSure},
      {Strategy::ThinkVerify, "<assessment></assessment>", Label::NotSure},
      {Strategy::ThinkVerify, "<assessment>none identified</assessment>", Label::NonVulnerable},
      {Strategy::ThinkVerify, "<assessment>Matches CWE-20.</assessment>", Label::Vulnerable},
  };
  require(corpus.size() >= 40, "verdict corpus must hold at least 40 crafted outputs");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Verdict v = parse_response(corpus[i].strategy, corpus[i].text);
    require(v.label == corpus[i].expected,
            "verdict case " + std::to_string(i) + " (" + strategy_name(corpus[i].strategy) +
                ") mapped to label " + std::to_string(static_cast<int>(v.label)) + ", expected " +
                std::to_string(static_cast<int>(corpus[i].expected)));
  }

  // Totality: 10,000 random strings, every strategy, no exceptions, and the
  // label always lands on 0, 1, or 2.
  const std::vector<std::string> pool = {
      "yes", "no", "YES", "NO", "maybe", "vulnerable", "not", "CWE-119", "cwe-", "CWE-",
      "<assessment>", "</assessment>", "<vulnerability_assessment>", "</vulnerability_assessment>",
      "<confidence>", "85%", "final decision", "Final Decision:", "improvement", "severity",
      "high", "\n", "  ", ":", ")", "(yes or no)", "label", "2", "\t", "\xc3\xa9", "\xf0\x9f"};
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    std::size_t tokens = rng() % 24;
    for (std::size_t t = 0; t < tokens; ++t) {
      text += pool[rng() % pool.size()];
      if (rng() % 3 == 0) text += ' ';
    }
    for (Strategy s : {Strategy::Baseline, Strategy::CoT, Strategy::Think,
                       Strategy::ThinkVerify}) {
      try {
        Verdict v = parse_response(s, text);
        int label = static_cast<int>(v.label);
        require(label >= 0 && label <= 2, "fuzzed verdict label out of range");
        require(v.raw_text == text, "fuzzed verdict must preserve the raw response");
      } catch (const CheckFailure&) {
        throw;
      } catch (const std::exception& e) {
        throw CheckFailure{"parser threw on fuzz input (" + strategy_name(s) +
                           "): " + std::string(e.what())};
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 6: grading arithmetic against brute-force recounts.

void check_grading_arithmetic() {
  // 2 models x 4 strategies x 2 tasks x 4 records = 64 deterministic results,
  // written through a real on-disk store and read back before aggregating.
  const std::vector<std::string> models = {"model-a", "model-b"};
  const std::vector<std::string> records = {"r0", "r1", "r2", "r3"};
  const std::vector<std::string> cwes = {"CWE-119", "CWE-787", "CWE-119", "CWE-416"};
  const std::map<std::string, Granularity> granularity = {{"r0", Granularity::G1},
                                                          {"r1", Granularity::G2},
                                                          {"r2", Granularity::G3},
                                                          {"r3", Granularity::G1}};
  const std::map<std::string, int> noise = {{"r0", 5}, {"r1", 37}, {"r2", 61}, {"r3", 99}};
  const std::map<std::string, ModelCategory> categories = {
      {"model-a", ModelCategory::General}, {"model-b", ModelCategory::CodeSpecific}};

  std::vector<VulnRecord> corpus;
  for (std::size_t i = 0; i < records.size(); ++i) {
    VulnRecord r = filter_record(records[i], cwes[i]);
    r.cve_id = "CVE-2021-" + std::to_string(1000 + i);
    corpus.push_back(r);
  }

  testsupport::TempDir tmp;
  const fs::path store_path = tmp / "results.jsonl";
  std::mt19937_64 rng(7);
  {
    ResultStore store(store_path);
    for (const std::string& rec : records)
      for (Strategy s : {Strategy::Baseline, Strategy::CoT, Strategy::Think,
                         Strategy::ThinkVerify})
        for (Task t : {Task::Detect, Task::PatchVerify})
          for (const std::string& model : models) {
            EvalResult r;
            r.record_id = rec;
            r.model_id = model;
            r.strategy = s;
            r.task = t;
            r.status = TrialStatus::Done;
            r.verdict = Verdict{};
            Grade g = rng() % 3 == 0   ? Grade::Correct
                      : rng() % 2 == 0 ? Grade::Incorrect
                                       : Grade::Ambiguous;
            r.outcome = GradeOutcome{g, GradingMode::Binary};
            r.run_tag = "fixture";
            r.timestamp = utc_timestamp();
            store.append(r);
          }
  }
  std::vector<EvalResult> results = ResultStore::read_all(store_path);
  require(results.size() == 64, "fixture store must hold 64 results");

  using Key = std::tuple<std::string, int, int>;  // model, strategy, task
  auto key_of = [](const EvalResult& r) {
    return Key{r.model_id, static_cast<int>(r.strategy), static_cast<int>(r.task)};
  };

  // --- accuracy_table ---
  std::map<Key, std::array<std::size_t, 3>> expected;  // correct, incorrect, ambiguous
  for (const EvalResult& r : results) {
    auto& e = expected[key_of(r)];
    switch (r.outcome->grade) {
      case Grade::Correct: ++e[0]; break;
      case Grade::Incorrect: ++e[1]; break;
      case Grade::Ambiguous: ++e[2]; break;
    }
  }
  AccuracyTable table = accuracy_table(results, categories);
  require(table.cells.size() == expected.size(), "accuracy table has unexpected cell count");
  for (const AccuracyCell& c : table.cells) {
    const auto& e = expected.at(Key{c.model_id, static_cast<int>(c.strategy),
                                    static_cast<int>(c.task)});
    require(c.correct == e[0] && c.incorrect == e[1] && c.ambiguous == e[2],
            "accuracy cell counts disagree with recount");
    require(c.correct + c.incorrect + c.ambiguous == c.total,
            "conservation violated in an accuracy cell");
    require(close_rel(c.accuracy_pct, 100.0 * double(c.correct) / double(c.total)),
            "accuracy percentage disagrees with recount");
    if (c.total > c.ambiguous)
      require(close_rel(*c.accuracy_excl_ambiguous_pct,
                        100.0 * double(c.correct) / double(c.total - c.ambiguous)),
              "exclusive accuracy percentage disagrees with recount");
  }
  // Averages: unweighted over member models, pooled over summed counts.
  for (const AverageRow& row : table.averages) {
    std::vector<double> member_pcts;
    std::size_t pooled_correct = 0, pooled_total = 0;
    for (const AccuracyCell& c : table.cells) {
      if (c.strategy != row.strategy || c.task != row.task) continue;
      bool in_scope = row.scope == "overall" ||
                      (categories.count(c.model_id) &&
                       category_name(categories.at(c.model_id)) == row.scope);
      if (!in_scope) continue;
      member_pcts.push_back(c.accuracy_pct);
      pooled_correct += c.correct;
      pooled_total += c.total;
    }
    double mean = 0;
    for (double p : member_pcts) mean += p;
    mean /= double(member_pcts.size());
    require(row.models == member_pcts.size(), "average row counts the wrong number of models");
    require(close_rel(row.mean_accuracy_pct, mean), "mean accuracy disagrees with recount");
    require(close_rel(row.pooled_accuracy_pct, 100.0 * double(pooled_correct) / double(pooled_total)),
            "pooled accuracy disagrees with recount");
  }

  // --- ambiguity_table ---
  AmbiguityTable ambiguity = ambiguity_table(results, categories);
  for (const AmbiguityCell& c : ambiguity.cells) {
    const auto& e = expected.at(Key{c.model_id, static_cast<int>(c.strategy),
                                    static_cast<int>(c.task)});
    require(c.ambiguous == e[2] && c.total == e[0] + e[1] + e[2],
            "ambiguity cell disagrees with recount");
    require(close_rel(c.rate_pct, 100.0 * double(c.ambiguous) / double(c.total)),
            "ambiguity rate disagrees with recount");
  }

  // --- cwe_breakdown ---
  CweBreakdown cwe = cwe_breakdown(results, corpus, 2);
  {
    // Independent ranking: count desc, then numeric CWE asc.
    std::map<std::string, std::size_t> freq;
    for (const VulnRecord& r : corpus) ++freq[r.cwe_id];
    std::vector<std::pair<std::string, std::size_t>> rank(freq.begin(), freq.end());
    std::sort(rank.begin(), rank.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return std::stol(a.first.substr(4)) < std::stol(b.first.substr(4));
    });
    rank.resize(2);
    require(cwe.ranking == rank, "cwe ranking disagrees with recount");
    std::set<std::string> top{rank[0].first, rank[1].first};
    std::map<std::tuple<std::string, int, std::string>, std::pair<std::size_t, std::size_t>> ecells;
    std::map<std::string, std::string> cwe_of;
    for (std::size_t i = 0; i < records.size(); ++i) cwe_of[records[i]] = cwes[i];
    for (const EvalResult& r : results) {
      const std::string& c = cwe_of.at(r.record_id);
      if (!top.count(c)) continue;
      auto& e = ecells[{r.model_id, static_cast<int>(r.strategy), c}];
      ++e.second;
      if (r.outcome->grade == Grade::Correct) ++e.first;
    }
    require(cwe.cells.size() == ecells.size(), "cwe breakdown has unexpected cell count");
    for (const CweCell& c : cwe.cells) {
      const auto& e = ecells.at({c.model_id, static_cast<int>(c.strategy), c.cwe});
      require(c.correct == e.first && c.total == e.second, "cwe cell disagrees with recount");
      require(close_rel(c.accuracy_pct, 100.0 * double(c.correct) / double(c.total)),
              "cwe accuracy disagrees with recount");
    }
  }

  // --- granularity_breakdown ---
  GranularityBreakdown gran = granularity_breakdown(results, granularity);
  {
    std::map<std::tuple<std::string, int, int, int>, std::pair<std::size_t, std::size_t>> ecells;
    for (const EvalResult& r : results) {
      auto& e = ecells[{r.model_id, static_cast<int>(r.strategy), static_cast<int>(r.task),
                        static_cast<int>(granularity.at(r.record_id))}];
      ++e.second;
      if (r.outcome->grade == Grade::Correct) ++e.first;
    }
    require(gran.cells.size() == ecells.size(), "granularity breakdown cell count");
    for (const GranularityCell& c : gran.cells) {
      const auto& e = ecells.at({c.model_id, static_cast<int>(c.strategy),
                                 static_cast<int>(c.task), static_cast<int>(c.granularity)});
      require(c.correct == e.first && c.total == e.second,
              "granularity cell disagrees with recount");
      require(close_rel(c.accuracy_pct, 100.0 * double(c.correct) / double(c.total)),
              "granularity accuracy disagrees with recount");
    }
  }

  // --- noise_correlation ---
  NoiseCorrelation corr = noise_correlation(results, noise);
  {
    // bucket -> (strategy, task) -> model -> (correct, total)
    std::map<std::tuple<int, int, int>, std::map<std::string, std::pair<std::size_t, std::size_t>>>
        series;
    for (const EvalResult& r : results) {
      int bucket = std::min(noise.at(r.record_id) / 10, 9);
      auto& e = series[{static_cast<int>(r.strategy), static_cast<int>(r.task), bucket}]
                      [r.model_id];
      ++e.second;
      if (r.outcome->grade == Grade::Correct) ++e.first;
    }
    require(corr.points.size() == series.size(), "noise correlation point count");
    for (const NoisePoint& p : corr.points) {
      const auto& by_model = series.at(
          {static_cast<int>(p.strategy), static_cast<int>(p.task), p.bucket_lo / 10});
      double mean = 0;
      std::size_t trials = 0;
      for (const auto& [model, e] : by_model) {
        mean += 100.0 * double(e.first) / double(e.second);
        trials += e.second;
      }
      mean /= double(by_model.size());
      require(p.models == by_model.size(), "noise point model count disagrees with recount");
      require(p.trials == trials, "noise point trial count disagrees with recount");
      require(close_rel(p.mean_accuracy_pct, mean), "noise mean disagrees with recount");
      require(p.bucket_hi == (p.bucket_lo == 90 ? 100 : p.bucket_lo + 10),
              "noise bucket bounds are wrong");
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 7: end-to-end grid against a scripted mock endpoint.

// A reply every strategy parser resolves to "vulnerable": the baseline
// question line, the CoT final decision, and both tagged assessments agree.
const std::string kSaysVulnerable =
    "Final Decision: the code is vulnerable (CWE-119).\n"
    "<vulnerability_assessment>The code is vulnerable. CWE-119</vulnerability_assessment>\n"
    "<assessment>The code is vulnerable. CWE-119. Severity: High</assessment>\n"
    "<confidence>90%</confidence>\n"
    "Vulnerability Present? YES";

const std::string kSaysSafe =
    "Final Decision: the code is not vulnerable.\n"
    "<vulnerability_assessment>not vulnerable</vulnerability_assessment>\n"
    "<assessment>not vulnerable</assessment>\n"
    "<confidence>90%</confidence>\n"
    "Vulnerability Present? NO";

RunInput e2e_input(const std::string& id, const std::string& marker) {
  RunInput in;
  in.record = filter_record(id, "CWE-119");
  in.pair.record_id = id;
  in.pair.vulnerable_text = "// File: f.c\nint f(void) {\n  " + marker + ";\n}\n";
  in.pair.patched_text = "// File: f.c\nint f(void) {\n  " + marker + "_again;\n}\n";
  in.pair.files_changed = 1;
  in.pair.functions_changed = 1;
  in.pair.granularity = Granularity::G1;
  return in;
}

void check_end_to_end() {
  // One record the scripted model always flags, one it always clears: every
  // (strategy, task) cell grades 1 correct + 1 incorrect = 50%.
  testsupport::MockModelServer server([](const std::string& prompt) {
    if (prompt.find("SIGNAL_FLAWED") != std::string::npos) return kSaysVulnerable;
    if (prompt.find("SIGNAL_CLEAN") != std::string::npos) return kSaysSafe;
    return std::string("unintelligible");
  });

  std::vector<RunInput> inputs = {e2e_input("rec-flawed", "SIGNAL_FLAWED"),
                                  e2e_input("rec-clean", "SIGNAL_CLEAN")};
  ModelProfile profile;
  profile.model_id = "mock-model";
  profile.endpoint_url = server.url();
  profile.context_tokens = 100000;
  profile.max_output_tokens = 512;
  profile.request_timeout_s = 10.0;

  PromptLibrary prompts(testsupport::prompts_dir());
  Gateway gateway(RetryPolicy{1, 10, 20});
  testsupport::TempDir tmp;
  ResultStore store(tmp / "e2e.jsonl");
  RunOptions options;
  options.run_tag = "e2e";

  std::size_t appended = run_grid(inputs, {profile}, prompts, gateway, store, options);
  require(appended == 16, "expected 16 fresh results, got " + std::to_string(appended));
  std::size_t resumed = run_grid(inputs, {profile}, prompts, gateway, store, options);
  require(resumed == 0, "resume re-ran " + std::to_string(resumed) + " completed cells");

  std::vector<EvalResult> results = ResultStore::read_all(store.path());
  require(results.size() == 16, "store must hold exactly the 16 grid results");
  for (const EvalResult& r : results)
    require(r.status == TrialStatus::Done, "every mock trial should complete");

  AccuracyTable table = accuracy_table(filter_by_tag(results, "e2e"));
  const fs::path csv = tmp / "accuracy.csv";
  write_accuracy_csv(csv, table);
  require(read_file(csv.string()) == testsupport::read_fixture("golden/e2e_accuracy.csv"),
          "emitted accuracy CSV differs from the hand-written golden");
}

// ---------------------------------------------------------------------------
// Criterion 8 (conditional): characterization of the released corpus.

void check_corpus_characterization() {
  const char* env = std::getenv("VULNBENCH_CORPUS");
  if (env == nullptr || *env == '\0')
    throw Skip{"VULNBENCH_CORPUS not set (released corpus unavailable offline)"};
  if (!fs::exists(env)) throw Skip{std::string("corpus file not found: ") + env};

  // JSON-lines, one {"record": {...}, "pair": {...}} object per line.
  std::istringstream in(read_file(env));
  std::vector<RunInput> inputs;
  std::vector<SchemaViolation> rejects;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    RunInput input;
    auto record = validate_entry(j.at("record").dump(), index++, rejects);
    require(record.has_value(), "corpus line failed record validation");
    input.record = *record;
    input.pair = pair_from_json(j.at("pair"));
    inputs.push_back(std::move(input));
  }

  Characterization c = corpus_characterization(inputs);
  require(c.total_vulnerabilities == 593,
          "total vulnerabilities: got " + std::to_string(c.total_vulnerabilities));
  require(c.unique_cves == 491, "unique CVEs: got " + std::to_string(c.unique_cves));
  require(c.unique_cwes == 52, "unique CWEs: got " + std::to_string(c.unique_cwes));
  require(c.most_common_cwe == "CWE-119", "most common CWE: got " + c.most_common_cwe);
  require(c.g1 == 27 && c.g2 == 244 && c.g3 == 322,
          "granularity counts: got " + std::to_string(c.g1) + "/" + std::to_string(c.g2) + "/" +
              std::to_string(c.g3));
  require(std::fabs(c.avg_files_changed - 2.71) <= 0.5,
          "avg files changed outside tolerance: " + std::to_string(c.avg_files_changed));
  require(std::fabs(c.avg_lines_added - 35.39) <= 0.5,
          "avg lines added outside tolerance: " + std::to_string(c.avg_lines_added));
}

// ---------------------------------------------------------------------------

struct Criterion {
  std::string id;
  std::string title;
  std::function<void()> body;
  double budget_ms;  // 0: no runtime budget
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"A1", "template fidelity: goldens byte-identical, manifest hashes verified",
       check_template_fidelity, 1000.0},
      {"A2", "filter thresholds: 12 crafted commits, all reasons, 500/501 boundary",
       check_filter_thresholds, 1000.0},
      {"A3", "extraction round-trip and per-function consistency on fixtures",
       check_extraction_roundtrip, 5000.0},
      {"A4", "granularity classification matches 1000 brute-force recounts",
       check_granularity_oracle, 0.0},
      {"A5", "verdict corpus (40 crafted outputs) and 10k-string totality fuzz",
       check_verdict_parsing, 0.0},
      {"A6", "aggregation of a 64-result store matches brute-force recounts",
       check_grading_arithmetic, 0.0},
      {"A7", "end-to-end mock grid: 16 results, zero on resume, golden CSV",
       check_end_to_end, 10000.0},
      {"A8", "released-corpus characterization (conditional on VULNBENCH_CORPUS)",
       check_corpus_characterization, 0.0},
  };

  int passed = 0, failed = 0, skipped = 0;
  for (const Criterion& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string verdict, detail;
    try {
      c.body();
      double ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
      if (c.budget_ms > 0 && ms > c.budget_ms) {
        verdict = "FAIL";
        detail = "exceeded " + std::to_string(static_cast<int>(c.budget_ms)) + " ms budget";
        ++failed;
      } else {
        verdict = "PASS";
        std::ostringstream t;
        t.precision(1);
        t << std::fixed << ms << " ms";
        detail = t.str();
        ++passed;
      }
    } catch (const Skip& s) {
      verdict = "SKIP";
      detail = s.reason;
      ++skipped;
    } catch (const CheckFailure& f) {
      verdict = "FAIL";
      detail = f.message;
      ++failed;
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = std::string("unexpected exception: ") + e.what();
      ++failed;
    }
    std::cout << "[" << verdict << "] " << c.id << " " << c.title << " (" << detail << ")\n";
  }
  std::cout << "acceptance: " << passed << " passed, " << failed << " failed, " << skipped
            << " skipped\n";
  return failed == 0 ? 0 : 1;
}
