#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnbench/runner.hpp"
#include "vulnbench/types.hpp"

namespace vulnbench {

struct EmptyResults : Error {
  EmptyResults() : Error("no completed results to aggregate") {}
};
struct EmptyCorpus : Error {
  EmptyCorpus() : Error("corpus is empty") {}
};
struct MissingAssessments : Error {
  explicit MissingAssessments(const std::vector<std::string>& ids);
  std::vector<std::string> record_ids;
};
struct UnwritablePath : Error {
  explicit UnwritablePath(const std::string& path) : Error("cannot write " + path) {}
};

struct AccuracyCell {
  std::string model_id;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t ambiguous = 0;
  std::size_t total = 0;  // = correct + incorrect + ambiguous
  double accuracy_pct = 0.0;
  std::optional<double> accuracy_excl_ambiguous_pct;  // unset when total == ambiguous
};

// Mean of member-model percentages (each model weighted equally regardless
// of trial count), plus the pooled-count variant for transparency.
struct AverageRow {
  std::string scope;  // "overall" or a model-category name
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  double mean_accuracy_pct = 0.0;
  double pooled_accuracy_pct = 0.0;
  std::size_t models = 0;
};

struct AccuracyTable {
  std::vector<AccuracyCell> cells;  // sorted by (model, strategy, task)
  std::vector<AverageRow> averages;
};

struct AmbiguityCell {
  std::string model_id;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  std::size_t ambiguous = 0;
  std::size_t total = 0;
  double rate_pct = 0.0;
};

struct AmbiguityAverage {
  std::string scope;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  double mean_ambiguous = 0.0;  // unweighted mean count over models
  std::size_t models = 0;
};

struct AmbiguityTable {
  std::vector<AmbiguityCell> cells;
  std::vector<AmbiguityAverage> averages;
};

struct CweCell {
  std::string model_id;
  Strategy strategy = Strategy::Baseline;
  std::string cwe;
  std::size_t correct = 0;
  std::size_t total = 0;  // Detect and PatchVerify pooled
  double accuracy_pct = 0.0;
};

struct CweBreakdown {
  std::vector<std::pair<std::string, std::size_t>> ranking;  // top_k by record count
  std::vector<CweCell> cells;
};

struct GranularityCell {
  std::string model_id;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  Granularity granularity = Granularity::G1;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy_pct = 0.0;
};

struct GranularityBreakdown {
  std::vector<GranularityCell> cells;
  std::vector<Granularity> empty_buckets;  // levels with no trials at all
};

struct NoisePoint {
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  int bucket_lo = 0;
  int bucket_hi = 0;  // inclusive only for the final bucket
  double mean_accuracy_pct = 0.0;  // unweighted over models
  std::size_t models = 0;
  std::size_t trials = 0;
};

struct NoiseCorrelation {
  int bucket_width = 10;
  std::vector<NoisePoint> points;
};

struct CoverageCell {
  std::string model_id;
  Strategy strategy = Strategy::Baseline;
  Task task = Task::Detect;
  std::size_t done = 0;
  std::size_t skipped_context = 0;
  std::size_t error = 0;
};

struct Characterization {
  std::size_t total_vulnerabilities = 0;
  std::size_t unique_cves = 0;
  std::size_t unique_cwes = 0;
  std::string most_common_cwe;
  int year_min = 0;
  int year_max = 0;
  double avg_files_changed = 0.0;
  double median_files_changed = 0.0;
  double avg_functions_changed = 0.0;
  double median_functions_changed = 0.0;
  double avg_lines_vulnerable = 0.0;
  double avg_lines_patched = 0.0;
  double avg_lines_added = 0.0;
  double median_lines_added = 0.0;
  double avg_lines_deleted = 0.0;
  double median_lines_deleted = 0.0;
  std::size_t g1 = 0;
  std::size_t g2 = 0;
  std::size_t g3 = 0;
};

std::vector<EvalResult> filter_by_tag(const std::vector<EvalResult>& results,
                                      const std::string& run_tag);

// Accuracy per (model, strategy, task) over Done trials; ambiguous responses
// count against accuracy in the primary percentage, with the exclusive
// variant alongside. Averages per category (when a mapping is given) and
// overall, as unweighted means over models.
AccuracyTable accuracy_table(const std::vector<EvalResult>& results,
                             const std::map<std::string, ModelCategory>& categories = {});

AmbiguityTable ambiguity_table(const std::vector<EvalResult>& results,
                               const std::map<std::string, ModelCategory>& categories = {});

// Per-CWE accuracy over the top_k most frequent CWEs in the kept corpus,
// pooling the two tasks per (model, strategy) cell.
CweBreakdown cwe_breakdown(const std::vector<EvalResult>& results,
                           const std::vector<VulnRecord>& corpus, std::size_t top_k);

GranularityBreakdown granularity_breakdown(const std::vector<EvalResult>& results,
                                           const std::map<std::string, Granularity>& granularity);

// Accuracy by residual-noise bucket: [0,w), [w,2w), ..., with 100 landing in
// the final closed bucket. Every result's record must carry a score.
NoiseCorrelation noise_correlation(const std::vector<EvalResult>& results,
                                   const std::map<std::string, int>& noise_scores,
                                   int bucket_width = 10);

std::vector<CoverageCell> coverage_table(const std::vector<EvalResult>& results);

Characterization corpus_characterization(const std::vector<RunInput>& inputs);

nlohmann::json characterization_to_json(const Characterization& c);

// Deterministic emitters: identical aggregates yield byte-identical files.
void write_accuracy_csv(const std::filesystem::path& path, const AccuracyTable& table);
void write_ambiguity_csv(const std::filesystem::path& path, const AmbiguityTable& table);
void write_coverage_csv(const std::filesystem::path& path, const std::vector<CoverageCell>& cells);
void write_characterization_json(const std::filesystem::path& path, const Characterization& c);
void write_cwe_heatmap_svg(const std::filesystem::path& path, const CweBreakdown& breakdown);
void write_granularity_svg(const std::filesystem::path& path, const GranularityBreakdown& breakdown);
void write_noise_svg(const std::filesystem::path& path, const NoiseCorrelation& correlation);
void write_summary_markdown(const std::filesystem::path& path, const AccuracyTable& accuracy,
                            const AmbiguityTable& ambiguity,
                            const std::vector<CoverageCell>& coverage);

// Writes the full bundle under <out_dir>/<run_tag>/.
struct ReportBundle {
  AccuracyTable accuracy;
  AmbiguityTable ambiguity;
  std::vector<CoverageCell> coverage;
  std::optional<CweBreakdown> cwe;
  std::optional<GranularityBreakdown> granularity;
  std::optional<NoiseCorrelation> noise;
  std::optional<Characterization> characterization;
};

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               const std::filesystem::path& out_dir,
                                               const std::string& run_tag);

}  // namespace vulnbench
