#include "vulnbench/extract.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "vulnbench/carve.hpp"
#include "vulnbench/util.hpp"

namespace vulnbench {

std::string side_name(Side s) { return s == Side::Vulnerable ? "vuln" : "patch"; }

std::string changed_in_name(ChangedIn c) {
  switch (c) {
    case ChangedIn::Vuln: return "vuln";
    case ChangedIn::Patch: return "patch";
    case ChangedIn::Both: return "both";
  }
  return "both";
}

namespace {

Side side_from_name(const std::string& s) {
  if (s == "vuln") return Side::Vulnerable;
  if (s == "patch") return Side::Patched;
  throw Error("unknown side: " + s);
}

ChangedIn changed_in_from_name(const std::string& s) {
  if (s == "vuln") return ChangedIn::Vuln;
  if (s == "patch") return ChangedIn::Patch;
  if (s == "both") return ChangedIn::Both;
  throw Error("unknown changed_in: " + s);
}

// 1-based line numbers touched by the diff in each image of one file.
struct ChangedLines {
  std::vector<std::size_t> old_lines;
  std::vector<std::size_t> new_lines;
};

ChangedLines changed_lines(const FileDiff& fd) {
  ChangedLines out;
  for (const Hunk& h : fd.hunks) {
    std::size_t old_ln = h.old_start;
    std::size_t new_ln = h.new_start;
    for (const HunkLine& line : h.lines) {
      switch (line.tag) {
        case LineTag::Context:
          ++old_ln, ++new_ln;
          break;
        case LineTag::Deleted:
          out.old_lines.push_back(old_ln++);
          break;
        case LineTag::Added:
          out.new_lines.push_back(new_ln++);
          break;
      }
    }
  }
  return out;
}

// One file's contribution to one side of the pair.
struct SideFilePart {
  std::vector<std::string> preamble_runs;
  std::vector<std::string> function_texts;  // in source order
};

struct FunctionKey {
  std::string file;
  std::string name;
  std::size_t occurrence;  // among same-named spans, for overload matching
  auto operator<=>(const FunctionKey&) const = default;
};

// Assigns each same-named span an occurrence index so overloads on the two
// sides pair up positionally.
std::map<std::size_t, FunctionKey> index_spans(const std::string& file,
                                               const std::vector<FunctionSpan>& spans) {
  std::map<std::string, std::size_t> seen;
  std::map<std::size_t, FunctionKey> keys;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    std::size_t occ = seen[spans[i].qualified_name]++;
    keys[i] = FunctionKey{file, spans[i].qualified_name, occ};
  }
  return keys;
}

std::vector<std::string> group_runs(const std::vector<std::size_t>& lines,
                                    const std::vector<std::string>& image_lines) {
  std::vector<std::string> runs;
  std::string current;
  std::size_t prev = 0;
  for (std::size_t ln : lines) {
    if (ln == 0 || ln > image_lines.size()) continue;  // defensive; apply_hunks validates
    if (!current.empty() && ln == prev + 1) {
      current += "\n" + image_lines[ln - 1];
    } else {
      if (!current.empty()) runs.push_back(current);
      current = image_lines[ln - 1];
    }
    prev = ln;
  }
  if (!current.empty()) runs.push_back(current);
  return runs;
}

std::string render_side(const std::vector<std::string>& file_order,
                        const std::map<std::string, SideFilePart>& parts) {
  std::vector<std::string> segments;
  for (const std::string& file : file_order) {
    auto it = parts.find(file);
    if (it == parts.end() || it->second.preamble_runs.empty()) continue;
    std::string seg = "// File: " + file + "\n";
    for (std::size_t i = 0; i < it->second.preamble_runs.size(); ++i) {
      if (i) seg += "\n\n";
      seg += it->second.preamble_runs[i];
    }
    segments.push_back(std::move(seg));
  }
  for (const std::string& file : file_order) {
    auto it = parts.find(file);
    if (it == parts.end() || it->second.function_texts.empty()) continue;
    std::string seg = "// File: " + file + "\n";
    for (std::size_t i = 0; i < it->second.function_texts.size(); ++i) {
      if (i) seg += "\n\n";
      seg += it->second.function_texts[i];
    }
    segments.push_back(std::move(seg));
  }
  if (segments.empty()) return "";
  std::string text;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) text += "\n\n";
    text += segments[i];
  }
  text += "\n";
  return text;
}

}  // namespace

AssembleResult assemble_blocks(const VulnRecord& record, const DiffSet& diff,
                               const std::map<std::string, std::string>& old_files,
                               const std::map<std::string, std::string>& new_files) {
  std::vector<std::string> file_order;
  std::map<std::string, SideFilePart> vuln_parts, patch_parts;
  std::vector<InventoryEntry> inventory;
  std::vector<PreambleSnippet> preamble;

  for (const FileDiff& fd : diff.files) {
    if (fd.binary) continue;
    ChangedLines changed = changed_lines(fd);
    if (changed.old_lines.empty() && changed.new_lines.empty()) continue;
    const std::string display = fd.display_path();
    file_order.push_back(display);

    auto image_of = [&](const std::map<std::string, std::string>& images, const std::string& path,
                        bool needed) -> std::optional<std::string> {
      if (path == "/dev/null") return std::string();
      auto it = images.find(path);
      if (it != images.end()) return it->second;
      if (needed) throw MissingFileImage(path);
      return std::nullopt;
    };

    // A side's image is required the moment that side has changed lines; the
    // counterpart image is used opportunistically when present.
    std::optional<std::string> old_image =
        image_of(old_files, fd.old_path, !changed.old_lines.empty());
    std::optional<std::string> new_image =
        image_of(new_files, fd.new_path, !changed.new_lines.empty());

    std::vector<std::string> old_lines_v, new_lines_v;
    CarveResult old_carve, new_carve;
    if (old_image) {
      old_lines_v = split_lines(*old_image).lines;
      old_carve = carve_functions(*old_image);
    }
    if (new_image) {
      new_lines_v = split_lines(*new_image).lines;
      new_carve = carve_functions(*new_image);
    }
    auto old_keys = index_spans(display, old_carve.spans);
    auto new_keys = index_spans(display, new_carve.spans);

    // Which spans hold changed lines, and which lines fall outside all spans.
    std::set<std::size_t> old_hit, new_hit;
    std::vector<std::size_t> old_loose, new_loose;
    for (std::size_t ln : changed.old_lines) {
      std::size_t idx = span_covering_line(old_carve.spans, ln);
      if (idx == span_npos) old_loose.push_back(ln);
      else old_hit.insert(idx);
    }
    for (std::size_t ln : changed.new_lines) {
      std::size_t idx = span_covering_line(new_carve.spans, ln);
      if (idx == span_npos) new_loose.push_back(ln);
      else new_hit.insert(idx);
    }

    // Changed-function set keyed for overload-safe matching across sides.
    std::map<FunctionKey, std::pair<bool, bool>> touched;  // key -> (in old, in new)
    for (std::size_t idx : old_hit) touched[old_keys[idx]].first = true;
    for (std::size_t idx : new_hit) touched[new_keys[idx]].second = true;

    std::map<FunctionKey, std::size_t> old_by_key, new_by_key;
    for (const auto& [idx, key] : old_keys) old_by_key[key] = idx;
    for (const auto& [idx, key] : new_keys) new_by_key[key] = idx;

    // Emit each changed function: the old version joins the vulnerable block
    // and the new version the patched block whenever that version exists, so
    // a pure-insertion patch still shows the function's pre-change form.
    std::set<std::size_t> vuln_emit, patch_emit;
    for (const auto& [key, sides] : touched) {
      auto old_it = old_by_key.find(key);
      auto new_it = new_by_key.find(key);
      if (old_it != old_by_key.end()) vuln_emit.insert(old_it->second);
      if (new_it != new_by_key.end()) patch_emit.insert(new_it->second);
      ChangedIn ci = sides.first && sides.second ? ChangedIn::Both
                     : sides.first              ? ChangedIn::Vuln
                                                : ChangedIn::Patch;
      inventory.push_back(InventoryEntry{display, key.name, ci});
    }

    for (std::size_t idx : vuln_emit) {
      const FunctionSpan& sp = old_carve.spans[idx];
      vuln_parts[display].function_texts.push_back(old_image->substr(sp.begin, sp.end - sp.begin));
    }
    for (std::size_t idx : patch_emit) {
      const FunctionSpan& sp = new_carve.spans[idx];
      patch_parts[display].function_texts.push_back(new_image->substr(sp.begin, sp.end - sp.begin));
    }
    for (const std::string& run : group_runs(old_loose, old_lines_v)) {
      vuln_parts[display].preamble_runs.push_back(run);
      preamble.push_back(PreambleSnippet{display, Side::Vulnerable, run});
    }
    for (const std::string& run : group_runs(new_loose, new_lines_v)) {
      patch_parts[display].preamble_runs.push_back(run);
      preamble.push_back(PreambleSnippet{display, Side::Patched, run});
    }
  }

  // Deterministic inventory order: file order, then name, then occurrence —
  // inventory is per-file already appended in key order, which sorts by file
  // only within this loop, so sort globally by (file-order index, name).
  std::map<std::string, std::size_t> file_rank;
  for (std::size_t i = 0; i < file_order.size(); ++i) file_rank.emplace(file_order[i], i);
  std::stable_sort(inventory.begin(), inventory.end(),
                   [&](const InventoryEntry& a, const InventoryEntry& b) {
                     return file_rank[a.file] < file_rank[b.file];
                   });

  std::string vuln_text = render_side(file_order, vuln_parts);
  std::string patch_text = render_side(file_order, patch_parts);

  auto has_functions = [](const std::map<std::string, SideFilePart>& parts) {
    for (const auto& [file, part] : parts)
      if (!part.function_texts.empty()) return true;
    return false;
  };

  if (vuln_text.empty() || patch_text.empty()) {
    EmptyBlockInfo info;
    info.empty_side = vuln_text.empty() ? Side::Vulnerable : Side::Patched;
    info.other_side_has_functions =
        vuln_text.empty() ? has_functions(patch_parts) : has_functions(vuln_parts);
    return AssembleResult{std::nullopt, info};
  }

  CodeBlockPair pair;
  pair.record_id = record.record_id;
  pair.vulnerable_text = std::move(vuln_text);
  pair.patched_text = std::move(patch_text);
  pair.function_inventory = std::move(inventory);
  pair.preamble_changes = std::move(preamble);
  ChangeStats stats = change_stats(diff, pair.function_inventory);
  pair.files_changed = stats.files_changed;
  pair.functions_changed = stats.functions_changed;
  pair.lines_added = stats.lines_added;
  pair.lines_deleted = stats.lines_deleted;
  pair.granularity = classify_granularity(pair.files_changed, pair.functions_changed);
  return AssembleResult{std::move(pair), std::nullopt};
}

Granularity classify_granularity(std::size_t files_changed, std::size_t functions_changed) {
  if (files_changed == 0 && functions_changed == 0) throw Unclassifiable();
  if (files_changed >= 2) return Granularity::G3;
  if (functions_changed >= 2) return Granularity::G2;
  return Granularity::G1;
}

Granularity classify_granularity(const CodeBlockPair& pair) {
  return classify_granularity(pair.files_changed, pair.functions_changed);
}

ChangeStats change_stats(const DiffSet& diff, const std::vector<InventoryEntry>& inventory) {
  ChangeStats stats;
  for (const FileDiff& fd : diff.files) {
    if (fd.binary) continue;
    std::size_t added = 0, deleted = 0;
    for (const Hunk& h : fd.hunks) {
      for (const HunkLine& line : h.lines) {
        if (line.tag == LineTag::Added) ++added;
        else if (line.tag == LineTag::Deleted) ++deleted;
      }
    }
    stats.lines_added += added;
    stats.lines_deleted += deleted;
    if (added + deleted > 0) ++stats.files_changed;
  }
  std::set<std::pair<std::string, std::string>> distinct;
  for (const InventoryEntry& e : inventory) distinct.emplace(e.file, e.function);
  stats.functions_changed = distinct.size();
  return stats;
}

nlohmann::json pair_to_json(const CodeBlockPair& pair) {
  nlohmann::json inv = nlohmann::json::array();
  for (const InventoryEntry& e : pair.function_inventory)
    inv.push_back({{"file", e.file}, {"function", e.function}, {"changed_in", changed_in_name(e.changed_in)}});
  nlohmann::json pre = nlohmann::json::array();
  for (const PreambleSnippet& p : pair.preamble_changes)
    pre.push_back({{"file", p.file}, {"side", side_name(p.side)}, {"text", p.text}});
  return nlohmann::json{{"record_id", pair.record_id},
                        {"vulnerable_text", pair.vulnerable_text},
                        {"patched_text", pair.patched_text},
                        {"files_changed", pair.files_changed},
                        {"functions_changed", pair.functions_changed},
                        {"lines_added", pair.lines_added},
                        {"lines_deleted", pair.lines_deleted},
                        {"granularity", granularity_name(pair.granularity)},
                        {"function_inventory", std::move(inv)},
                        {"preamble_changes", std::move(pre)}};
}

CodeBlockPair pair_from_json(const nlohmann::json& j) {
  CodeBlockPair pair;
  pair.record_id = j.at("record_id").get<std::string>();
  pair.vulnerable_text = j.at("vulnerable_text").get<std::string>();
  pair.patched_text = j.at("patched_text").get<std::string>();
  pair.files_changed = j.at("files_changed").get<std::size_t>();
  pair.functions_changed = j.at("functions_changed").get<std::size_t>();
  pair.lines_added = j.at("lines_added").get<std::size_t>();
  pair.lines_deleted = j.at("lines_deleted").get<std::size_t>();
  pair.granularity = parse_granularity(j.at("granularity").get<std::string>());
  for (const auto& e : j.value("function_inventory", nlohmann::json::array()))
    pair.function_inventory.push_back(InventoryEntry{e.at("file").get<std::string>(),
                                                     e.at("function").get<std::string>(),
                                                     changed_in_from_name(e.at("changed_in").get<std::string>())});
  for (const auto& p : j.value("preamble_changes", nlohmann::json::array()))
    pair.preamble_changes.push_back(PreambleSnippet{p.at("file").get<std::string>(),
                                                    side_from_name(p.at("side").get<std::string>()),
                                                    p.at("text").get<std::string>()});
  return pair;
}

std::optional<std::string> DirectoryImageSource::old_image(const VulnRecord& record,
                                                           const std::string& path) {
  std::filesystem::path p = root_ / record.record_id / "old" / path;
  if (!std::filesystem::exists(p)) return std::nullopt;
  return read_file(p.string());
}

std::optional<std::string> DirectoryImageSource::new_image(const VulnRecord& record,
                                                           const std::string& path) {
  std::filesystem::path p = root_ / record.record_id / "new" / path;
  if (!std::filesystem::exists(p)) return std::nullopt;
  return read_file(p.string());
}

std::optional<std::string> GitImageSource::show(const VulnRecord& record,
                                                const std::string& rev_and_path) {
  std::filesystem::path repo = root_ / record.project;
  std::string quoted = "'";
  for (char c : rev_and_path) {
    if (c == '\'') quoted += "'\\''";
    else quoted += c;
  }
  quoted += "'";
  std::string cmd = "git -C '" + repo.string() + "' show " + quoted + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return std::nullopt;
  std::string out;
  std::array<char, 8192> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  int status = pclose(pipe);
  if (status != 0) return std::nullopt;
  return out;
}

std::optional<std::string> GitImageSource::old_image(const VulnRecord& record,
                                                     const std::string& path) {
  return show(record, record.fix_commit + "^:" + path);
}

std::optional<std::string> GitImageSource::new_image(const VulnRecord& record,
                                                     const std::string& path) {
  return show(record, record.fix_commit + ":" + path);
}

AssembleResult extract_record(const VulnRecord& record, const DiffSet& diff, ImageSource& source) {
  std::map<std::string, std::string> old_files, new_files;
  for (const FileDiff& fd : diff.files) {
    if (fd.binary) continue;
    if (fd.old_path != "/dev/null" && !old_files.count(fd.old_path)) {
      if (auto img = source.old_image(record, fd.old_path)) old_files.emplace(fd.old_path, std::move(*img));
    }
    if (fd.new_path != "/dev/null" && !new_files.count(fd.new_path)) {
      if (auto img = source.new_image(record, fd.new_path)) new_files.emplace(fd.new_path, std::move(*img));
    }
  }
  return assemble_blocks(record, diff, old_files, new_files);
}

}  // namespace vulnbench
