#include "vulnbench/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>

#include "vulnbench/util.hpp"

namespace vulnbench {

MissingAssessments::MissingAssessments(const std::vector<std::string>& ids)
    : Error("records without a noise assessment: " +
            [&] {
              std::string joined;
              for (std::size_t i = 0; i < ids.size() && i < 5; ++i)
                joined += (i ? ", " : "") + ids[i];
              if (ids.size() > 5) joined += ", ...";
              return joined;
            }()),
      record_ids(ids) {}

namespace {

constexpr std::array<Strategy, 4> kStrategies{Strategy::Baseline, Strategy::CoT, Strategy::Think,
                                              Strategy::ThinkVerify};
constexpr std::array<Task, 2> kTasks{Task::Detect, Task::PatchVerify};
constexpr std::array<Granularity, 3> kGranularities{Granularity::G1, Granularity::G2,
                                                    Granularity::G3};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

double mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

long cwe_number(const std::string& cwe) {
  if (cwe.rfind("CWE-", 0) != 0) return std::numeric_limits<long>::max();
  try {
    return std::stol(cwe.substr(4));
  } catch (...) {
    return std::numeric_limits<long>::max();
  }
}

struct CountKey {
  std::string model;
  Strategy strategy;
  Task task;
  bool operator<(const CountKey& o) const {
    if (model != o.model) return model < o.model;
    if (strategy != o.strategy) return strategy < o.strategy;
    return task < o.task;
  }
};

struct Counts {
  std::size_t correct = 0, incorrect = 0, ambiguous = 0;
  std::size_t total() const { return correct + incorrect + ambiguous; }
};

std::map<CountKey, Counts> tally(const std::vector<EvalResult>& results) {
  std::map<CountKey, Counts> counts;
  for (const EvalResult& r : results) {
    if (r.status != TrialStatus::Done || !r.outcome) continue;
    Counts& c = counts[CountKey{r.model_id, r.strategy, r.task}];
    switch (r.outcome->grade) {
      case Grade::Correct: ++c.correct; break;
      case Grade::Incorrect: ++c.incorrect; break;
      case Grade::Ambiguous: ++c.ambiguous; break;
    }
  }
  return counts;
}

// Scopes a model belongs to: always "overall", plus its category when known.
std::vector<std::string> scopes_of(const std::string& model,
                                   const std::map<std::string, ModelCategory>& categories) {
  std::vector<std::string> scopes{"overall"};
  auto it = categories.find(model);
  if (it != categories.end()) scopes.push_back(category_name(it->second));
  return scopes;
}

}  // namespace

std::vector<EvalResult> filter_by_tag(const std::vector<EvalResult>& results,
                                      const std::string& run_tag) {
  std::vector<EvalResult> out;
  for (const EvalResult& r : results)
    if (r.run_tag == run_tag) out.push_back(r);
  return out;
}

AccuracyTable accuracy_table(const std::vector<EvalResult>& results,
                             const std::map<std::string, ModelCategory>& categories) {
  auto counts = tally(results);
  if (counts.empty()) throw EmptyResults();

  AccuracyTable table;
  for (const auto& [key, c] : counts) {
    AccuracyCell cell;
    cell.model_id = key.model;
    cell.strategy = key.strategy;
    cell.task = key.task;
    cell.correct = c.correct;
    cell.incorrect = c.incorrect;
    cell.ambiguous = c.ambiguous;
    cell.total = c.total();
    cell.accuracy_pct = pct(c.correct, cell.total);
    if (cell.total > cell.ambiguous)
      cell.accuracy_excl_ambiguous_pct = pct(c.correct, cell.total - cell.ambiguous);
    table.cells.push_back(std::move(cell));
  }

  // scope -> (strategy, task) -> member percentages and pooled counts.
  std::map<std::string, std::map<std::pair<Strategy, Task>, std::vector<double>>> members;
  std::map<std::string, std::map<std::pair<Strategy, Task>, Counts>> pooled;
  for (const AccuracyCell& cell : table.cells) {
    for (const std::string& scope : scopes_of(cell.model_id, categories)) {
      auto st = std::make_pair(cell.strategy, cell.task);
      members[scope][st].push_back(cell.accuracy_pct);
      Counts& c = pooled[scope][st];
      c.correct += cell.correct;
      c.incorrect += cell.incorrect;
      c.ambiguous += cell.ambiguous;
    }
  }
  for (const auto& [scope, by_st] : members) {
    for (Strategy strategy : kStrategies) {
      for (Task task : kTasks) {
        auto it = by_st.find({strategy, task});
        if (it == by_st.end()) continue;
        AverageRow row;
        row.scope = scope;
        row.strategy = strategy;
        row.task = task;
        row.mean_accuracy_pct = mean(it->second);
        const Counts& p = pooled[scope][{strategy, task}];
        row.pooled_accuracy_pct = pct(p.correct, p.total());
        row.models = it->second.size();
        table.averages.push_back(std::move(row));
      }
    }
  }
  return table;
}

AmbiguityTable ambiguity_table(const std::vector<EvalResult>& results,
                               const std::map<std::string, ModelCategory>& categories) {
  auto counts = tally(results);
  if (counts.empty()) throw EmptyResults();

  AmbiguityTable table;
  for (const auto& [key, c] : counts) {
    AmbiguityCell cell;
    cell.model_id = key.model;
    cell.strategy = key.strategy;
    cell.task = key.task;
    cell.ambiguous = c.ambiguous;
    cell.total = c.total();
    cell.rate_pct = pct(c.ambiguous, cell.total);
    table.cells.push_back(std::move(cell));
  }

  std::map<std::string, std::map<std::pair<Strategy, Task>, std::vector<double>>> members;
  for (const AmbiguityCell& cell : table.cells)
    for (const std::string& scope : scopes_of(cell.model_id, categories))
      members[scope][{cell.strategy, cell.task}].push_back(static_cast<double>(cell.ambiguous));
  for (const auto& [scope, by_st] : members) {
    for (Strategy strategy : kStrategies) {
      for (Task task : kTasks) {
        auto it = by_st.find({strategy, task});
        if (it == by_st.end()) continue;
        AmbiguityAverage row;
        row.scope = scope;
        row.strategy = strategy;
        row.task = task;
        row.mean_ambiguous = mean(it->second);
        row.models = it->second.size();
        table.averages.push_back(std::move(row));
      }
    }
  }
  return table;
}

CweBreakdown cwe_breakdown(const std::vector<EvalResult>& results,
                           const std::vector<VulnRecord>& corpus, std::size_t top_k) {
  std::map<std::string, std::size_t> freq;
  std::map<std::string, std::string> cwe_of;
  for (const VulnRecord& r : corpus) {
    if (r.cwe_id.empty()) continue;
    ++freq[r.cwe_id];
    cwe_of[r.record_id] = r.cwe_id;
  }
  std::vector<std::pair<std::string, std::size_t>> ranking(freq.begin(), freq.end());
  std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return cwe_number(a.first) < cwe_number(b.first);
  });
  if (ranking.size() > top_k) ranking.resize(top_k);
  std::set<std::string> top;
  for (const auto& [cwe, n] : ranking) top.insert(cwe);

  struct CK {
    std::string model;
    Strategy strategy;
    std::string cwe;
    bool operator<(const CK& o) const {
      if (model != o.model) return model < o.model;
      if (strategy != o.strategy) return strategy < o.strategy;
      return cwe_number(cwe) < cwe_number(o.cwe);
    }
  };
  std::map<CK, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  bool any = false;
  for (const EvalResult& r : results) {
    if (r.status != TrialStatus::Done || !r.outcome) continue;
    any = true;
    auto it = cwe_of.find(r.record_id);
    if (it == cwe_of.end() || !top.count(it->second)) continue;
    auto& [correct, total] = counts[CK{r.model_id, r.strategy, it->second}];
    ++total;
    if (r.outcome->grade == Grade::Correct) ++correct;
  }
  if (!any) throw EmptyResults();

  CweBreakdown out;
  out.ranking = std::move(ranking);
  for (const auto& [key, ct] : counts) {
    CweCell cell;
    cell.model_id = key.model;
    cell.strategy = key.strategy;
    cell.cwe = key.cwe;
    cell.correct = ct.first;
    cell.total = ct.second;
    cell.accuracy_pct = pct(ct.first, ct.second);
    out.cells.push_back(std::move(cell));
  }
  return out;
}

GranularityBreakdown granularity_breakdown(const std::vector<EvalResult>& results,
                                           const std::map<std::string, Granularity>& granularity) {
  struct GK {
    std::string model;
    Strategy strategy;
    Task task;
    Granularity g;
    bool operator<(const GK& o) const {
      if (model != o.model) return model < o.model;
      if (strategy != o.strategy) return strategy < o.strategy;
      if (task != o.task) return task < o.task;
      return g < o.g;
    }
  };
  std::map<GK, std::pair<std::size_t, std::size_t>> counts;
  bool any = false;
  for (const EvalResult& r : results) {
    if (r.status != TrialStatus::Done || !r.outcome) continue;
    any = true;
    auto it = granularity.find(r.record_id);
    if (it == granularity.end())
      throw Error("record " + r.record_id + " has no granularity classification");
    auto& [correct, total] = counts[GK{r.model_id, r.strategy, r.task, it->second}];
    ++total;
    if (r.outcome->grade == Grade::Correct) ++correct;
  }
  if (!any) throw EmptyResults();

  GranularityBreakdown out;
  std::set<Granularity> seen;
  for (const auto& [key, ct] : counts) {
    GranularityCell cell;
    cell.model_id = key.model;
    cell.strategy = key.strategy;
    cell.task = key.task;
    cell.granularity = key.g;
    cell.correct = ct.first;
    cell.total = ct.second;
    cell.accuracy_pct = pct(ct.first, ct.second);
    out.cells.push_back(std::move(cell));
    seen.insert(key.g);
  }
  for (Granularity g : kGranularities)
    if (!seen.count(g)) out.empty_buckets.push_back(g);
  return out;
}

NoiseCorrelation noise_correlation(const std::vector<EvalResult>& results,
                                   const std::map<std::string, int>& noise_scores,
                                   int bucket_width) {
  if (bucket_width <= 0 || bucket_width > 100) throw Error("bucket width must be in 1..100");
  std::vector<std::string> missing;
  for (const EvalResult& r : results) {
    if (r.status != TrialStatus::Done) continue;
    if (!noise_scores.count(r.record_id)) missing.push_back(r.record_id);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw MissingAssessments(missing);
  }

  const int buckets = (100 + bucket_width - 1) / bucket_width;
  auto bucket_of = [&](int score) { return std::min(score / bucket_width, buckets - 1); };

  struct NK {
    Strategy strategy;
    Task task;
    int bucket;
    std::string model;
    bool operator<(const NK& o) const {
      if (strategy != o.strategy) return strategy < o.strategy;
      if (task != o.task) return task < o.task;
      if (bucket != o.bucket) return bucket < o.bucket;
      return model < o.model;
    }
  };
  std::map<NK, std::pair<std::size_t, std::size_t>> per_model;
  bool any = false;
  for (const EvalResult& r : results) {
    if (r.status != TrialStatus::Done || !r.outcome) continue;
    any = true;
    int bucket = bucket_of(noise_scores.at(r.record_id));
    auto& [correct, total] = per_model[NK{r.strategy, r.task, bucket, r.model_id}];
    ++total;
    if (r.outcome->grade == Grade::Correct) ++correct;
  }
  if (!any) throw EmptyResults();

  NoiseCorrelation out;
  out.bucket_width = bucket_width;
  // Collapse models into an unweighted mean per (strategy, task, bucket).
  std::map<std::tuple<Strategy, Task, int>, std::pair<std::vector<double>, std::size_t>> series;
  for (const auto& [key, ct] : per_model) {
    auto& [accs, trials] = series[{key.strategy, key.task, key.bucket}];
    accs.push_back(pct(ct.first, ct.second));
    trials += ct.second;
  }
  for (const auto& [key, data] : series) {
    NoisePoint p;
    p.strategy = std::get<0>(key);
    p.task = std::get<1>(key);
    int bucket = std::get<2>(key);
    p.bucket_lo = bucket * bucket_width;
    p.bucket_hi = bucket == buckets - 1 ? 100 : (bucket + 1) * bucket_width;
    p.mean_accuracy_pct = mean(data.first);
    p.models = data.first.size();
    p.trials = data.second;
    out.points.push_back(std::move(p));
  }
  return out;
}

std::vector<CoverageCell> coverage_table(const std::vector<EvalResult>& results) {
  std::map<CountKey, CoverageCell> cells;
  for (const EvalResult& r : results) {
    CoverageCell& cell = cells[CountKey{r.model_id, r.strategy, r.task}];
    cell.model_id = r.model_id;
    cell.strategy = r.strategy;
    cell.task = r.task;
    switch (r.status) {
      case TrialStatus::Done: ++cell.done; break;
      case TrialStatus::SkippedContext: ++cell.skipped_context; break;
      case TrialStatus::Error: ++cell.error; break;
    }
  }
  std::vector<CoverageCell> out;
  for (auto& [key, cell] : cells) out.push_back(std::move(cell));
  return out;
}

Characterization corpus_characterization(const std::vector<RunInput>& inputs) {
  if (inputs.empty()) throw EmptyCorpus();
  Characterization c;
  c.total_vulnerabilities = inputs.size();

  std::set<std::string> cves;
  std::map<std::string, std::size_t> cwe_freq;
  std::vector<double> files, functions, added, deleted;
  double lines_vuln = 0.0, lines_patched = 0.0;
  c.year_min = inputs.front().record.discovery_year;
  c.year_max = c.year_min;

  for (const RunInput& input : inputs) {
    const VulnRecord& r = input.record;
    const CodeBlockPair& p = input.pair;
    cves.insert(r.cve_id);
    if (!r.cwe_id.empty()) ++cwe_freq[r.cwe_id];
    c.year_min = std::min(c.year_min, r.discovery_year);
    c.year_max = std::max(c.year_max, r.discovery_year);
    files.push_back(static_cast<double>(p.files_changed));
    functions.push_back(static_cast<double>(p.functions_changed));
    added.push_back(static_cast<double>(p.lines_added));
    deleted.push_back(static_cast<double>(p.lines_deleted));
    lines_vuln += static_cast<double>(split_lines(p.vulnerable_text).lines.size());
    lines_patched += static_cast<double>(split_lines(p.patched_text).lines.size());
    switch (p.granularity) {
      case Granularity::G1: ++c.g1; break;
      case Granularity::G2: ++c.g2; break;
      case Granularity::G3: ++c.g3; break;
    }
  }

  c.unique_cves = cves.size();
  c.unique_cwes = cwe_freq.size();
  std::size_t best = 0;
  for (const auto& [cwe, n] : cwe_freq) {
    if (n > best || (n == best && !c.most_common_cwe.empty() &&
                     cwe_number(cwe) < cwe_number(c.most_common_cwe))) {
      best = n;
      c.most_common_cwe = cwe;
    }
  }
  const double n = static_cast<double>(inputs.size());
  c.avg_files_changed = mean(files);
  c.median_files_changed = median(files);
  c.avg_functions_changed = mean(functions);
  c.median_functions_changed = median(functions);
  c.avg_lines_vulnerable = lines_vuln / n;
  c.avg_lines_patched = lines_patched / n;
  c.avg_lines_added = mean(added);
  c.median_lines_added = median(added);
  c.avg_lines_deleted = mean(deleted);
  c.median_lines_deleted = median(deleted);
  return c;
}

nlohmann::json characterization_to_json(const Characterization& c) {
  return nlohmann::json{{"total_vulnerabilities", c.total_vulnerabilities},
                        {"unique_cves", c.unique_cves},
                        {"unique_cwes", c.unique_cwes},
                        {"most_common_cwe", c.most_common_cwe},
                        {"year_min", c.year_min},
                        {"year_max", c.year_max},
                        {"avg_files_changed", c.avg_files_changed},
                        {"median_files_changed", c.median_files_changed},
                        {"avg_functions_changed", c.avg_functions_changed},
                        {"median_functions_changed", c.median_functions_changed},
                        {"avg_lines_vulnerable", c.avg_lines_vulnerable},
                        {"avg_lines_patched", c.avg_lines_patched},
                        {"avg_lines_added", c.avg_lines_added},
                        {"median_lines_added", c.median_lines_added},
                        {"avg_lines_deleted", c.avg_lines_deleted},
                        {"median_lines_deleted", c.median_lines_deleted},
                        {"granularity", {{"G1", c.g1}, {"G2", c.g2}, {"G3", c.g3}}}};
}

namespace {

void write_or_throw(const std::filesystem::path& path, const std::string& content) {
  try {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_file(path.string(), content);
  } catch (const std::exception&) {
    throw UnwritablePath(path.string());
  }
}

}  // namespace

void write_accuracy_csv(const std::filesystem::path& path, const AccuracyTable& table) {
  if (table.cells.empty()) throw EmptyResults();
  std::string out = "model,strategy,task,correct,incorrect,ambiguous,total,accuracy_pct\n";
  for (const AccuracyCell& c : table.cells) {
    out += c.model_id + "," + strategy_name(c.strategy) + "," + task_name(c.task) + "," +
           std::to_string(c.correct) + "," + std::to_string(c.incorrect) + "," +
           std::to_string(c.ambiguous) + "," + std::to_string(c.total) + "," +
           fmt2(c.accuracy_pct) + "\n";
  }
  write_or_throw(path, out);
}

void write_ambiguity_csv(const std::filesystem::path& path, const AmbiguityTable& table) {
  if (table.cells.empty()) throw EmptyResults();
  std::string out = "model,strategy,task,ambiguous,total,rate_pct\n";
  for (const AmbiguityCell& c : table.cells) {
    out += c.model_id + "," + strategy_name(c.strategy) + "," + task_name(c.task) + "," +
           std::to_string(c.ambiguous) + "," + std::to_string(c.total) + "," + fmt2(c.rate_pct) +
           "\n";
  }
  write_or_throw(path, out);
}

void write_coverage_csv(const std::filesystem::path& path, const std::vector<CoverageCell>& cells) {
  if (cells.empty()) throw EmptyResults();
  std::string out = "model,strategy,task,done,skipped_context,error\n";
  for (const CoverageCell& c : cells) {
    out += c.model_id + "," + strategy_name(c.strategy) + "," + task_name(c.task) + "," +
           std::to_string(c.done) + "," + std::to_string(c.skipped_context) + "," +
           std::to_string(c.error) + "\n";
  }
  write_or_throw(path, out);
}

void write_characterization_json(const std::filesystem::path& path, const Characterization& c) {
  write_or_throw(path, characterization_to_json(c).dump(2) + "\n");
}

namespace {

std::string heat_color(double accuracy_pct) {
  // Two-stop blend, red (#d73027) at 0% to green (#1a9850) at 100%.
  double t = std::clamp(accuracy_pct / 100.0, 0.0, 1.0);
  int r = static_cast<int>(std::lround(215 + (26 - 215) * t));
  int g = static_cast<int>(std::lround(48 + (152 - 48) * t));
  int b = static_cast<int>(std::lround(39 + (80 - 39) * t));
  return "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")";
}

const char* strategy_color(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "#4c78a8";
    case Strategy::CoT: return "#f58518";
    case Strategy::Think: return "#54a24b";
    case Strategy::ThinkVerify: return "#b279a2";
  }
  return "#4c78a8";
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_cwe_heatmap_svg(const std::filesystem::path& path, const CweBreakdown& breakdown) {
  if (breakdown.cells.empty() || breakdown.ranking.empty()) throw EmptyResults();

  std::vector<std::pair<std::string, Strategy>> rows;
  for (const CweCell& c : breakdown.cells) {
    auto row = std::make_pair(c.model_id, c.strategy);
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end());

  const int cell_w = 46, cell_h = 24, left = 230, top = 56;
  const int width = left + cell_w * static_cast<int>(breakdown.ranking.size()) + 20;
  const int height = top + cell_h * static_cast<int>(rows.size()) + 20;

  std::map<std::pair<std::pair<std::string, Strategy>, std::string>, const CweCell*> lookup;
  for (const CweCell& c : breakdown.cells) lookup[{{c.model_id, c.strategy}, c.cwe}] = &c;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<text x=\"8\" y=\"20\" font-size=\"14\">Accuracy by CWE (tasks pooled)</text>\n";
  for (std::size_t j = 0; j < breakdown.ranking.size(); ++j) {
    int x = left + static_cast<int>(j) * cell_w + cell_w / 2;
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top - 8) +
           "\" font-size=\"9\" text-anchor=\"middle\">" + svg_escape(breakdown.ranking[j].first) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int y = top + static_cast<int>(i) * cell_h;
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + 16) +
           "\" font-size=\"10\" text-anchor=\"end\">" +
           svg_escape(rows[i].first + " / " + strategy_name(rows[i].second)) + "</text>\n";
    for (std::size_t j = 0; j < breakdown.ranking.size(); ++j) {
      int x = left + static_cast<int>(j) * cell_w;
      auto it = lookup.find({rows[i], breakdown.ranking[j].first});
      if (it == lookup.end()) {
        svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
               std::to_string(cell_w - 2) + "\" height=\"" + std::to_string(cell_h - 2) +
               "\" fill=\"#eeeeee\"/>\n";
        continue;
      }
      const CweCell& c = *it->second;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
             std::to_string(cell_w - 2) + "\" height=\"" + std::to_string(cell_h - 2) +
             "\" fill=\"" + heat_color(c.accuracy_pct) + "\"><title>" +
             svg_escape(c.model_id + " " + strategy_name(c.strategy) + " " + c.cwe) + ": " +
             fmt2(c.accuracy_pct) + "% of " + std::to_string(c.total) + "</title></rect>\n";
      svg += "<text x=\"" + std::to_string(x + (cell_w - 2) / 2) + "\" y=\"" +
             std::to_string(y + 16) + "\" font-size=\"9\" text-anchor=\"middle\" fill=\"#ffffff\">" +
             fmt2(c.accuracy_pct) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  write_or_throw(path, svg);
}

void write_granularity_svg(const std::filesystem::path& path,
                           const GranularityBreakdown& breakdown) {
  if (breakdown.cells.empty()) throw EmptyResults();

  // Mean accuracy over models per (granularity, strategy, task).
  std::map<std::tuple<Granularity, Strategy, Task>, std::vector<double>> series;
  for (const GranularityCell& c : breakdown.cells)
    series[{c.granularity, c.strategy, c.task}].push_back(c.accuracy_pct);

  const int chart_h = 220, bar_w = 18, group_gap = 40, left = 50, top = 40;
  const int group_w = bar_w * 8 + group_gap;
  const int width = left + group_w * 3 + 240;
  const int height = top + chart_h + 60;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<text x=\"8\" y=\"20\" font-size=\"14\">Accuracy by change granularity</text>\n";
  for (int line = 0; line <= 100; line += 25) {
    int y = top + chart_h - chart_h * line / 100;
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(y) + "\" x2=\"" +
           std::to_string(left + group_w * 3) + "\" y2=\"" + std::to_string(y) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + 4) +
           "\" font-size=\"9\" text-anchor=\"end\">" + std::to_string(line) + "</text>\n";
  }

  for (std::size_t gi = 0; gi < kGranularities.size(); ++gi) {
    Granularity g = kGranularities[gi];
    int group_x = left + static_cast<int>(gi) * group_w;
    svg += "<text x=\"" + std::to_string(group_x + bar_w * 4) + "\" y=\"" +
           std::to_string(top + chart_h + 24) + "\" font-size=\"12\" text-anchor=\"middle\">" +
           granularity_name(g) + "</text>\n";
    int slot = 0;
    for (Strategy strategy : kStrategies) {
      for (Task task : kTasks) {
        auto it = series.find({g, strategy, task});
        if (it != series.end()) {
          double acc = 0;
          for (double v : it->second) acc += v;
          acc /= static_cast<double>(it->second.size());
          int h = static_cast<int>(std::lround(chart_h * acc / 100.0));
          int x = group_x + slot * bar_w;
          int y = top + chart_h - h;
          svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
                 std::to_string(bar_w - 3) + "\" height=\"" + std::to_string(h) + "\" fill=\"" +
                 strategy_color(strategy) + "\"" +
                 (task == Task::PatchVerify ? " fill-opacity=\"0.45\"" : "") + "><title>" +
                 granularity_name(g) + " " + strategy_name(strategy) + " " + task_name(task) +
                 ": " + fmt2(acc) + "%</title></rect>\n";
        }
        ++slot;
      }
    }
  }

  int legend_x = left + group_w * 3 + 20, legend_y = top;
  for (Strategy strategy : kStrategies) {
    svg += "<rect x=\"" + std::to_string(legend_x) + "\" y=\"" + std::to_string(legend_y) +
           "\" width=\"12\" height=\"12\" fill=\"" + std::string(strategy_color(strategy)) +
           "\"/>\n";
    svg += "<text x=\"" + std::to_string(legend_x + 18) + "\" y=\"" + std::to_string(legend_y + 10) +
           "\" font-size=\"10\">" + strategy_name(strategy) + "</text>\n";
    legend_y += 18;
  }
  svg += "<text x=\"" + std::to_string(legend_x) + "\" y=\"" + std::to_string(legend_y + 12) +
         "\" font-size=\"10\">solid: detect, faded: patch_verify</text>\n";
  svg += "</svg>\n";
  write_or_throw(path, svg);
}

void write_noise_svg(const std::filesystem::path& path, const NoiseCorrelation& correlation) {
  if (correlation.points.empty()) throw EmptyResults();

  const int chart_w = 520, chart_h = 220, left = 50, top = 40;
  const int width = left + chart_w + 220;
  const int height = top + chart_h + 60;

  auto x_of = [&](double score) {
    return left + static_cast<int>(std::lround(chart_w * score / 100.0));
  };
  auto y_of = [&](double acc) {
    return top + chart_h - static_cast<int>(std::lround(chart_h * acc / 100.0));
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<text x=\"8\" y=\"20\" font-size=\"14\">Accuracy vs. residual noise</text>\n";
  for (int line = 0; line <= 100; line += 25) {
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(y_of(line)) +
           "\" x2=\"" + std::to_string(left + chart_w) + "\" y2=\"" + std::to_string(y_of(line)) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y_of(line) + 4) +
           "\" font-size=\"9\" text-anchor=\"end\">" + std::to_string(line) + "</text>\n";
    svg += "<text x=\"" + std::to_string(x_of(line)) + "\" y=\"" +
           std::to_string(top + chart_h + 16) + "\" font-size=\"9\" text-anchor=\"middle\">" +
           std::to_string(line) + "</text>\n";
  }

  std::map<std::pair<Strategy, Task>, std::vector<const NoisePoint*>> series;
  for (const NoisePoint& p : correlation.points) series[{p.strategy, p.task}].push_back(&p);
  for (auto& [key, points] : series) {
    std::sort(points.begin(), points.end(),
              [](const NoisePoint* a, const NoisePoint* b) { return a->bucket_lo < b->bucket_lo; });
    std::string poly;
    for (const NoisePoint* p : points) {
      double mid = (p->bucket_lo + p->bucket_hi) / 2.0;
      poly += std::to_string(x_of(mid)) + "," + std::to_string(y_of(p->mean_accuracy_pct)) + " ";
      svg += "<circle cx=\"" + std::to_string(x_of(mid)) + "\" cy=\"" +
             std::to_string(y_of(p->mean_accuracy_pct)) + "\" r=\"3\" fill=\"" +
             strategy_color(key.first) + "\"><title>" + strategy_name(key.first) + " " +
             task_name(key.second) + " [" + std::to_string(p->bucket_lo) + "," +
             std::to_string(p->bucket_hi) + "): " + fmt2(p->mean_accuracy_pct) + "%</title></circle>\n";
    }
    svg += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"" +
           strategy_color(key.first) + "\" stroke-width=\"2\"" +
           (key.second == Task::PatchVerify ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
  }

  int legend_x = left + chart_w + 20, legend_y = top;
  for (Strategy strategy : kStrategies) {
    svg += "<line x1=\"" + std::to_string(legend_x) + "\" y1=\"" + std::to_string(legend_y + 6) +
           "\" x2=\"" + std::to_string(legend_x + 18) + "\" y2=\"" + std::to_string(legend_y + 6) +
           "\" stroke=\"" + std::string(strategy_color(strategy)) + "\" stroke-width=\"3\"/>\n";
    svg += "<text x=\"" + std::to_string(legend_x + 24) + "\" y=\"" + std::to_string(legend_y + 10) +
           "\" font-size=\"10\">" + strategy_name(strategy) + "</text>\n";
    legend_y += 18;
  }
  svg += "<text x=\"" + std::to_string(legend_x) + "\" y=\"" + std::to_string(legend_y + 12) +
         "\" font-size=\"10\">solid: detect, dashed: patch_verify</text>\n";
  svg += "</svg>\n";
  write_or_throw(path, svg);
}

void write_summary_markdown(const std::filesystem::path& path, const AccuracyTable& accuracy,
                            const AmbiguityTable& ambiguity,
                            const std::vector<CoverageCell>& coverage) {
  std::string md = "# Run summary\n\n## Accuracy\n\n";
  md += "| model | strategy | task | correct | incorrect | ambiguous | total | accuracy % | accuracy excl. ambiguous % |\n";
  md += "|---|---|---|---:|---:|---:|---:|---:|---:|\n";
  for (const AccuracyCell& c : accuracy.cells) {
    md += "| " + c.model_id + " | " + strategy_name(c.strategy) + " | " + task_name(c.task) +
          " | " + std::to_string(c.correct) + " | " + std::to_string(c.incorrect) + " | " +
          std::to_string(c.ambiguous) + " | " + std::to_string(c.total) + " | " +
          fmt2(c.accuracy_pct) + " | " +
          (c.accuracy_excl_ambiguous_pct ? fmt2(*c.accuracy_excl_ambiguous_pct) : "-") + " |\n";
  }
  md += "\n### Averages (unweighted over models; pooled counts alongside)\n\n";
  md += "| scope | strategy | task | mean accuracy % | pooled accuracy % | models |\n";
  md += "|---|---|---|---:|---:|---:|\n";
  for (const AverageRow& row : accuracy.averages) {
    md += "| " + row.scope + " | " + strategy_name(row.strategy) + " | " + task_name(row.task) +
          " | " + fmt2(row.mean_accuracy_pct) + " | " + fmt2(row.pooled_accuracy_pct) + " | " +
          std::to_string(row.models) + " |\n";
  }
  md += "\n## Ambiguous responses\n\n| model | strategy | task | ambiguous | total | rate % |\n";
  md += "|---|---|---|---:|---:|---:|\n";
  for (const AmbiguityCell& c : ambiguity.cells) {
    md += "| " + c.model_id + " | " + strategy_name(c.strategy) + " | " + task_name(c.task) +
          " | " + std::to_string(c.ambiguous) + " | " + std::to_string(c.total) + " | " +
          fmt2(c.rate_pct) + " |\n";
  }
  md += "\n## Coverage\n\n| model | strategy | task | done | skipped (context) | error |\n";
  md += "|---|---|---|---:|---:|---:|\n";
  for (const CoverageCell& c : coverage) {
    md += "| " + c.model_id + " | " + strategy_name(c.strategy) + " | " + task_name(c.task) +
          " | " + std::to_string(c.done) + " | " + std::to_string(c.skipped_context) + " | " +
          std::to_string(c.error) + " |\n";
  }
  write_or_throw(path, md);
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               const std::filesystem::path& out_dir,
                                               const std::string& run_tag) {
  const std::filesystem::path dir = out_dir / run_tag;
  std::vector<std::filesystem::path> written;
  auto add = [&](const std::filesystem::path& p) { written.push_back(p); };

  write_accuracy_csv(dir / "accuracy.csv", bundle.accuracy);
  add(dir / "accuracy.csv");
  write_ambiguity_csv(dir / "ambiguity.csv", bundle.ambiguity);
  add(dir / "ambiguity.csv");
  write_coverage_csv(dir / "coverage.csv", bundle.coverage);
  add(dir / "coverage.csv");
  write_summary_markdown(dir / "summary.md", bundle.accuracy, bundle.ambiguity, bundle.coverage);
  add(dir / "summary.md");
  if (bundle.cwe) {
    write_cwe_heatmap_svg(dir / "cwe_heatmap.svg", *bundle.cwe);
    add(dir / "cwe_heatmap.svg");
  }
  if (bundle.granularity) {
    write_granularity_svg(dir / "granularity.svg", *bundle.granularity);
    add(dir / "granularity.svg");
  }
  if (bundle.noise) {
    write_noise_svg(dir / "noise.svg", *bundle.noise);
    add(dir / "noise.svg");
  }
  if (bundle.characterization) {
    write_characterization_json(dir / "characterization.json", *bundle.characterization);
    add(dir / "characterization.json");
  }
  return written;
}

}  // namespace vulnbench
