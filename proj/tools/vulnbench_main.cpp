// Command-line front end for the vulnerability benchmark pipeline: metadata
// ingestion, block extraction, noise filtering, model evaluation, and report
// generation, each as a subcommand over JSON-lines artifacts.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vulnbench/analysis.hpp"
#include "vulnbench/corpus.hpp"
#include "vulnbench/diff.hpp"
#include "vulnbench/extract.hpp"
#include "vulnbench/filtering.hpp"
#include "vulnbench/gateway.hpp"
#include "vulnbench/prompting.hpp"
#include "vulnbench/runner.hpp"
#include "vulnbench/util.hpp"

namespace vb = vulnbench;

namespace {

std::vector<vb::VulnRecord> load_corpus(const std::string& path) {
  vb::ParseReport report = vb::parse_metadata(path);
  for (const vb::SchemaViolation& v : report.rejects)
    std::cerr << "reject entry " << v.entry_index << " [" << v.field << "]: " << v.message << "\n";
  return report.records;
}

vb::DiffSet load_diff(const std::string& diffs_dir, const std::string& record_id) {
  return vb::parse_unified_diff(vb::read_file(diffs_dir + "/" + record_id + ".diff"));
}

std::map<std::string, vb::CodeBlockPair> load_blocks(const std::string& path) {
  std::map<std::string, vb::CodeBlockPair> blocks;
  std::ifstream in(path);
  if (!in) throw vb::FileUnreadable("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (vb::trim(line).empty()) continue;
    vb::CodeBlockPair pair = vb::pair_from_json(nlohmann::json::parse(line));
    blocks[pair.record_id] = std::move(pair);
  }
  return blocks;
}

std::vector<vb::ModelProfile> load_profiles(const std::string& path,
                                            const std::vector<std::string>& only) {
  auto profiles = vb::profiles_from_json(nlohmann::json::parse(vb::read_file(path)));
  if (only.empty()) return profiles;
  std::vector<vb::ModelProfile> selected;
  for (const std::string& id : only) {
    bool found = false;
    for (const vb::ModelProfile& p : profiles) {
      if (p.model_id == id) {
        selected.push_back(p);
        found = true;
        break;
      }
    }
    if (!found) throw vb::Error("model " + id + " not in config");
  }
  return selected;
}

std::vector<vb::Strategy> parse_strategies(const std::string& csv) {
  std::vector<vb::Strategy> out;
  for (const std::string& name : vb::split(csv, ','))
    if (!vb::trim(name).empty()) out.push_back(vb::parse_strategy(vb::trim(name)));
  if (out.empty()) throw vb::Error("no strategies selected");
  return out;
}

std::vector<vb::Task> parse_tasks(const std::string& csv) {
  std::vector<vb::Task> out;
  for (const std::string& name : vb::split(csv, ','))
    if (!vb::trim(name).empty()) out.push_back(vb::parse_task(vb::trim(name)));
  if (out.empty()) throw vb::Error("no tasks selected");
  return out;
}

// Joins corpus records with their extracted block pairs; records without a
// block (filtered out or failed extraction) are reported and skipped.
std::vector<vb::RunInput> join_inputs(const std::vector<vb::VulnRecord>& records,
                                      const std::map<std::string, vb::CodeBlockPair>& blocks) {
  std::vector<vb::RunInput> inputs;
  for (const vb::VulnRecord& r : records) {
    auto it = blocks.find(r.record_id);
    if (it == blocks.end()) {
      std::cerr << "no block pair for " << r.record_id << ", skipping\n";
      continue;
    }
    inputs.push_back(vb::RunInput{r, it->second});
  }
  if (inputs.empty()) throw vb::Error("no records with block pairs");
  return inputs;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw vb::Error("cannot write " + path);
  return out;
}

struct EvalFlags {
  std::string corpus, blocks, config, store, prompts = "assets/prompts";
  std::string strategies = "baseline,cot,think,think_verify";
  std::string tasks = "detect,patch_verify";
  std::string run_tag = "default";
  std::vector<std::string> models;
  std::string judge;
  int workers = 1;
  double temperature = 0.7;
  std::optional<std::uint64_t> seed;
  bool cwe_match = false;
  bool cwe_targeted = false;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f, bool with_run_tag) {
  cmd->add_option("--corpus", f.corpus, "metadata JSON-lines file")->required();
  cmd->add_option("--blocks", f.blocks, "extracted block pairs (JSON-lines)")->required();
  cmd->add_option("--config", f.config, "model profiles JSON")->required();
  cmd->add_option("--store", f.store, "result store (JSON-lines, append-only)")->required();
  cmd->add_option("--prompts", f.prompts, "prompt template directory");
  cmd->add_option("--strategies", f.strategies, "comma-separated strategy names");
  cmd->add_option("--tasks", f.tasks, "comma-separated task names");
  cmd->add_option("--models", f.models, "restrict to these model ids");
  cmd->add_option("--workers", f.workers, "parallel trial workers")->check(CLI::PositiveNumber);
  cmd->add_option("--temperature", f.temperature, "sampling temperature");
  cmd->add_option("--seed", f.seed, "completion seed passed to the endpoint");
  cmd->add_option("--judge", f.judge, "judge model id for not-sure escalation");
  cmd->add_flag("--cwe-match", f.cwe_match, "grade detect hits only when the CWE matches");
  cmd->add_flag("--cwe-targeted", f.cwe_targeted, "name the target CWE in baseline prompts");
  if (with_run_tag) cmd->add_option("--run-tag", f.run_tag, "tag results under this run name");
}

vb::RunOptions make_options(const EvalFlags& f, const std::vector<vb::ModelProfile>& all_profiles) {
  vb::RunOptions options;
  options.strategies = parse_strategies(f.strategies);
  options.tasks = parse_tasks(f.tasks);
  options.run_tag = f.run_tag;
  options.grading = f.cwe_match ? vb::GradingMode::CweMatch : vb::GradingMode::Binary;
  options.params.temperature = f.temperature;
  options.params.seed = f.seed;
  options.cwe_targeted = f.cwe_targeted;
  options.workers = f.workers;
  if (!f.judge.empty()) {
    for (const vb::ModelProfile& p : all_profiles)
      if (p.model_id == f.judge) options.judge_profile = p;
    if (!options.judge_profile) throw vb::Error("judge model " + f.judge + " not in config");
    options.use_judge = true;
  }
  return options;
}

int cmd_ingest(const std::string& corpus, const std::string& out_path) {
  vb::ParseReport report = vb::parse_metadata(corpus);
  for (const vb::SchemaViolation& v : report.rejects)
    std::cerr << "reject entry " << v.entry_index << " [" << v.field << "]: " << v.message << "\n";
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << vb::serialize_records(report.records);
  }
  std::cout << "ingested " << report.records.size() << " records, rejected "
            << report.rejects.size() << "\n";
  return 0;
}

int cmd_extract(const std::string& corpus, const std::string& diffs, const std::string& images,
                const std::string& clones, const std::string& out_path) {
  auto records = load_corpus(corpus);
  std::unique_ptr<vb::ImageSource> source;
  if (!images.empty())
    source = std::make_unique<vb::DirectoryImageSource>(images);
  else if (!clones.empty())
    source = std::make_unique<vb::GitImageSource>(clones);
  else
    throw vb::Error("one of --images or --clones is required");

  auto out = open_out(out_path);
  std::size_t pairs = 0, empties = 0, failures = 0;
  for (const vb::VulnRecord& record : records) {
    try {
      vb::DiffSet diff = load_diff(diffs, record.record_id);
      vb::AssembleResult result = vb::extract_record(record, diff, *source);
      if (result.pair) {
        out << vb::pair_to_json(*result.pair).dump() << "\n";
        ++pairs;
      } else {
        std::cerr << record.record_id << ": empty " << vb::side_name(result.empty->empty_side)
                  << " side\n";
        ++empties;
      }
    } catch (const std::exception& e) {
      std::cerr << record.record_id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  std::cout << "extracted " << pairs << " block pairs (" << empties << " one-sided, " << failures
            << " failed)\n";
  return failures == 0 ? 0 : 1;
}

int cmd_filter(const std::string& corpus, const std::string& diffs, const std::string& images,
               const std::string& clones, std::size_t threshold, const std::string& rule,
               const std::string& out_path) {
  auto records = load_corpus(corpus);
  std::unique_ptr<vb::ImageSource> source;
  if (!images.empty())
    source = std::make_unique<vb::DirectoryImageSource>(images);
  else if (!clones.empty())
    source = std::make_unique<vb::GitImageSource>(clones);

  vb::FilterConfig config;
  config.size_threshold = threshold;
  if (rule == "max")
    config.size_rule = vb::SizeRule::Max;
  else if (rule != "sum")
    throw vb::Error("--size-rule must be sum or max");

  auto out = open_out(out_path);
  std::size_t kept = 0, rejected = 0, failures = 0;
  for (const vb::VulnRecord& record : records) {
    try {
      vb::DiffSet diff = load_diff(diffs, record.record_id);
      // Without file images the block-level checks cannot run; the size and
      // CWE checks still apply to a pair-shaped placeholder.
      vb::AssembleResult assembly;
      if (source)
        assembly = vb::extract_record(record, diff, *source);
      else
        assembly.pair = vb::CodeBlockPair{};
      vb::FilterOutcome outcome = vb::heuristic_filter(record, diff, assembly, config);
      out << vb::filter_outcome_to_json(outcome).dump() << "\n";
      ++(outcome.keep ? kept : rejected);
    } catch (const std::exception& e) {
      std::cerr << record.record_id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  std::cout << "kept " << kept << ", rejected " << rejected << " (" << failures << " failed)\n";
  return failures == 0 ? 0 : 1;
}

int cmd_score_noise(const std::string& corpus, const std::string& diffs, const std::string& config,
                    const std::string& scorer, const std::string& prompts,
                    const std::string& out_path) {
  auto records = load_corpus(corpus);
  auto profiles = load_profiles(config, {scorer});
  const vb::ModelProfile& profile = profiles.front();
  vb::PromptLibrary library(prompts);
  vb::Gateway gateway;
  vb::CompletionFn complete = [&](const std::string& prompt) {
    return gateway.complete(profile, prompt).text;
  };

  auto out = open_out(out_path);
  std::size_t scored = 0, failures = 0;
  for (const vb::VulnRecord& record : records) {
    try {
      std::string diff_text = vb::read_file(diffs + "/" + record.record_id + ".diff");
      vb::NoiseAssessment assessment =
          vb::score_noise(record, diff_text, complete, library.noise_template(), scorer);
      out << vb::noise_assessment_to_json(assessment).dump() << "\n";
      ++scored;
    } catch (const std::exception& e) {
      std::cerr << record.record_id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  std::cout << "scored " << scored << " records (" << failures << " failed)\n";
  return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const EvalFlags& f) {
  auto records = load_corpus(f.corpus);
  auto inputs = join_inputs(records, load_blocks(f.blocks));
  auto all_profiles = load_profiles(f.config, {});
  auto profiles = f.models.empty() ? all_profiles : load_profiles(f.config, f.models);
  vb::PromptLibrary library(f.prompts);
  vb::Gateway gateway;
  vb::ResultStore store(f.store);
  if (store.quarantined_on_open() > 0)
    std::cerr << "quarantined " << store.quarantined_on_open() << " partial store lines\n";
  vb::RunOptions options = make_options(f, all_profiles);
  std::size_t appended = vb::run_grid(inputs, profiles, library, gateway, store, options);
  std::cout << "appended " << appended << " results under run tag " << options.run_tag << "\n";
  return 0;
}

int cmd_leakage(const EvalFlags& f) {
  auto records = load_corpus(f.corpus);
  auto inputs = join_inputs(records, load_blocks(f.blocks));
  auto all_profiles = load_profiles(f.config, {});
  auto profiles = f.models.empty() ? all_profiles : load_profiles(f.config, f.models);
  vb::PromptLibrary library(f.prompts);
  vb::Gateway gateway;
  vb::ResultStore store(f.store);
  vb::RunOptions options = make_options(f, all_profiles);
  vb::LeakageCounts counts =
      vb::run_leakage_split(inputs, profiles, library, gateway, store, options);
  std::cout << "appended " << counts.pre_appended << " pre-cutoff and " << counts.post_appended
            << " post-cutoff results\n";
  return 0;
}

int cmd_sample(const std::string& corpus, double fraction, std::uint64_t seed) {
  auto records = load_corpus(corpus);
  for (const std::string& id : vb::sample_for_review(records, fraction, seed))
    std::cout << id << "\n";
  return 0;
}

int cmd_report(const std::string& store_path, const std::string& out_dir,
               const std::string& run_tag, const std::string& corpus, const std::string& blocks,
               const std::string& noise, const std::string& config, std::size_t top_k,
               int bucket_width) {
  auto all_results = vb::ResultStore::read_all(store_path);
  auto results = vb::filter_by_tag(all_results, run_tag);
  if (results.empty()) throw vb::Error("no results under run tag " + run_tag);

  std::map<std::string, vb::ModelCategory> categories;
  if (!config.empty())
    for (const vb::ModelProfile& p : load_profiles(config, {}))
      categories[p.model_id] = p.category;

  vb::ReportBundle bundle;
  bundle.accuracy = vb::accuracy_table(results, categories);
  bundle.ambiguity = vb::ambiguity_table(results, categories);
  bundle.coverage = vb::coverage_table(results);

  std::vector<vb::VulnRecord> records;
  if (!corpus.empty()) {
    records = load_corpus(corpus);
    bundle.cwe = vb::cwe_breakdown(results, records, top_k);
  }
  std::map<std::string, vb::CodeBlockPair> pairs;
  if (!blocks.empty()) {
    pairs = load_blocks(blocks);
    std::map<std::string, vb::Granularity> granularity;
    for (const auto& [id, pair] : pairs) granularity[id] = pair.granularity;
    bundle.granularity = vb::granularity_breakdown(results, granularity);
  }
  if (!corpus.empty() && !blocks.empty()) {
    std::vector<vb::RunInput> inputs;
    for (const vb::VulnRecord& r : records) {
      auto it = pairs.find(r.record_id);
      if (it != pairs.end()) inputs.push_back(vb::RunInput{r, it->second});
    }
    if (!inputs.empty()) bundle.characterization = vb::corpus_characterization(inputs);
  }
  if (!noise.empty()) {
    std::map<std::string, int> scores;
    std::ifstream in(noise);
    if (!in) throw vb::FileUnreadable("cannot open " + noise);
    std::string line;
    while (std::getline(in, line)) {
      if (vb::trim(line).empty()) continue;
      vb::NoiseAssessment a = vb::noise_assessment_from_json(nlohmann::json::parse(line));
      scores[a.record_id] = a.score;
    }
    bundle.noise = vb::noise_correlation(results, scores, bucket_width);
  }

  auto written = vb::emit_report(bundle, out_dir, run_tag);
  for (const auto& path : written) std::cout << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulnerability-detection benchmark pipeline"};
  app.require_subcommand(1);

  // ingest
  std::string ing_corpus, ing_out;
  CLI::App* ingest = app.add_subcommand("ingest", "validate and normalize metadata");
  ingest->add_option("--corpus", ing_corpus, "metadata JSON-lines file")->required();
  ingest->add_option("--out", ing_out, "write normalized records here");

  // extract
  std::string ext_corpus, ext_diffs, ext_images, ext_clones, ext_out;
  CLI::App* extract = app.add_subcommand("extract", "assemble vulnerable/patched block pairs");
  extract->add_option("--corpus", ext_corpus)->required();
  extract->add_option("--diffs", ext_diffs, "directory of <record_id>.diff files")->required();
  extract->add_option("--images", ext_images, "directory of pre/post file images");
  extract->add_option("--clones", ext_clones, "directory of git clones, one per project");
  extract->add_option("--out", ext_out, "block pairs output (JSON-lines)")->required();

  // filter
  std::string fil_corpus, fil_diffs, fil_images, fil_clones, fil_out, fil_rule = "sum";
  std::size_t fil_threshold = 500;
  CLI::App* filter = app.add_subcommand("filter", "apply the heuristic noise filters");
  filter->add_option("--corpus", fil_corpus)->required();
  filter->add_option("--diffs", fil_diffs)->required();
  filter->add_option("--images", fil_images);
  filter->add_option("--clones", fil_clones);
  filter->add_option("--size-threshold", fil_threshold, "changed-line limit (default 500)");
  filter->add_option("--size-rule", fil_rule, "sum (default) or max of added/deleted");
  filter->add_option("--out", fil_out, "filter outcomes output (JSON-lines)")->required();

  // score-noise
  std::string noi_corpus, noi_diffs, noi_config, noi_scorer, noi_out;
  std::string noi_prompts = "assets/prompts";
  CLI::App* score = app.add_subcommand("score-noise", "LLM noise percentage per commit");
  score->add_option("--corpus", noi_corpus)->required();
  score->add_option("--diffs", noi_diffs)->required();
  score->add_option("--config", noi_config, "model profiles JSON")->required();
  score->add_option("--scorer", noi_scorer, "model id used for scoring")->required();
  score->add_option("--prompts", noi_prompts);
  score->add_option("--out", noi_out, "noise assessments output (JSON-lines)")->required();

  // evaluate / leakage
  EvalFlags eval_flags, leak_flags;
  CLI::App* evaluate = app.add_subcommand("evaluate", "run the evaluation grid");
  add_eval_flags(evaluate, eval_flags, true);
  CLI::App* leakage = app.add_subcommand("leakage", "run the training-cutoff split");
  add_eval_flags(leakage, leak_flags, false);

  // sample
  std::string sam_corpus;
  double sam_fraction = 0.1;
  std::uint64_t sam_seed = 0;
  CLI::App* sample = app.add_subcommand("sample", "draw a deterministic review sample");
  sample->add_option("--corpus", sam_corpus)->required();
  sample->add_option("--fraction", sam_fraction, "fraction of records (0, 1]");
  sample->add_option("--seed", sam_seed, "sampling seed");

  // report
  std::string rep_store, rep_out = "reports", rep_tag = "default";
  std::string rep_corpus, rep_blocks, rep_noise, rep_config;
  std::size_t rep_top_k = 10;
  int rep_bucket = 10;
  CLI::App* report = app.add_subcommand("report", "aggregate results into tables and figures");
  report->add_option("--store", rep_store)->required();
  report->add_option("--out", rep_out, "report output directory");
  report->add_option("--run-tag", rep_tag);
  report->add_option("--corpus", rep_corpus, "enables the CWE table and characterization");
  report->add_option("--blocks", rep_blocks, "enables granularity and characterization");
  report->add_option("--noise", rep_noise, "noise assessments, enables the correlation figure");
  report->add_option("--config", rep_config, "model profiles, enables category averages");
  report->add_option("--top-k", rep_top_k, "CWE classes in the heatmap");
  report->add_option("--bucket-width", rep_bucket, "noise bucket width in percent");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ing_corpus, ing_out);
    if (*extract) return cmd_extract(ext_corpus, ext_diffs, ext_images, ext_clones, ext_out);
    if (*filter)
      return cmd_filter(fil_corpus, fil_diffs, fil_images, fil_clones, fil_threshold, fil_rule,
                        fil_out);
    if (*score)
      return cmd_score_noise(noi_corpus, noi_diffs, noi_config, noi_scorer, noi_prompts, noi_out);
    if (*evaluate) return cmd_evaluate(eval_flags);
    if (*leakage) return cmd_leakage(leak_flags);
    if (*sample) return cmd_sample(sam_corpus, sam_fraction, sam_seed);
    if (*report)
      return cmd_report(rep_store, rep_out, rep_tag, rep_corpus, rep_blocks, rep_noise, rep_config,
                        rep_top_k, rep_bucket);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
