#include "vulnbench/diff.hpp"

#include <cctype>

#include "vulnbench/util.hpp"

namespace vulnbench {

namespace {

// Strips the conventional a/ b/ prefixes from --- and +++ paths.
std::string clean_path(std::string path) {
  // Paths may carry a trailing tab + timestamp in non-git diffs.
  auto tab = path.find('\t');
  if (tab != std::string::npos) path.resize(tab);
  if (path == "/dev/null") return path;
  if (path.size() > 2 && (path.compare(0, 2, "a/") == 0 || path.compare(0, 2, "b/") == 0)) {
    return path.substr(2);
  }
  return path;
}

bool parse_count(const std::string& line, std::size_t& pos, std::size_t& value) {
  if (pos >= line.size() || !std::isdigit(static_cast<unsigned char>(line[pos]))) return false;
  value = 0;
  while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
    value = value * 10 + static_cast<std::size_t>(line[pos] - '0');
    ++pos;
  }
  return true;
}

// "@@ -old_start[,old_len] +new_start[,new_len] @@ ..."
bool parse_hunk_header(const std::string& line, Hunk& hunk) {
  if (line.compare(0, 4, "@@ -") != 0) return false;
  std::size_t pos = 4;
  if (!parse_count(line, pos, hunk.old_start)) return false;
  hunk.old_len = 1;
  if (pos < line.size() && line[pos] == ',') {
    ++pos;
    if (!parse_count(line, pos, hunk.old_len)) return false;
  }
  if (pos + 1 >= line.size() || line[pos] != ' ' || line[pos + 1] != '+') return false;
  pos += 2;
  if (!parse_count(line, pos, hunk.new_start)) return false;
  hunk.new_len = 1;
  if (pos < line.size() && line[pos] == ',') {
    ++pos;
    if (!parse_count(line, pos, hunk.new_len)) return false;
  }
  return line.compare(pos, 3, " @@") == 0;
}

struct HunkCounters {
  std::size_t old_seen = 0;  // context + deleted
  std::size_t new_seen = 0;  // context + added
};

}  // namespace

DiffSet parse_unified_diff(const std::string& text) {
  DiffSet out;
  LineSplit lines = split_lines(text);

  FileDiff* file = nullptr;
  Hunk* hunk = nullptr;
  HunkCounters counters;
  std::size_t hunk_header_line = 0;

  auto close_hunk = [&]() {
    if (!hunk) return;
    if (counters.old_seen != hunk->old_len || counters.new_seen != hunk->new_len) {
      throw MalformedDiff(hunk_header_line, "hunk body does not match header counts");
    }
    hunk = nullptr;
  };

  auto ensure_unique_path = [&](const std::string& path, std::size_t lineno) {
    if (path == "/dev/null") return;
    for (const auto& f : out.files) {
      if (&f == file) continue;
      if (f.old_path == path || f.new_path == path) {
        throw MalformedDiff(lineno, "file appears more than once: " + path);
      }
    }
  };

  for (std::size_t i = 0; i < lines.lines.size(); ++i) {
    const std::string& line = lines.lines[i];
    std::size_t lineno = i + 1;

    if (line.rfind("diff --git ", 0) == 0) {
      close_hunk();
      out.files.emplace_back();
      file = &out.files.back();
      // Header paths are provisional; ---/+++ lines override them.
      auto rest = line.substr(11);
      auto mid = rest.find(" b/");
      if (mid != std::string::npos && rest.rfind("a/", 0) == 0) {
        file->old_path = rest.substr(2, mid - 2);
        file->new_path = rest.substr(mid + 3);
      }
      continue;
    }
    if (line.rfind("Binary files ", 0) == 0 || line.rfind("GIT binary patch", 0) == 0) {
      close_hunk();
      if (!file) {
        out.files.emplace_back();
        file = &out.files.back();
      }
      file->binary = true;
      continue;
    }
    if (line.rfind("--- ", 0) == 0) {
      close_hunk();
      if (!file || !file->hunks.empty() || file->binary) {
        out.files.emplace_back();
        file = &out.files.back();
      }
      file->old_path = clean_path(line.substr(4));
      ensure_unique_path(file->old_path, lineno);
      continue;
    }
    if (line.rfind("+++ ", 0) == 0) {
      if (!file) throw MalformedDiff(lineno, "+++ without ---");
      file->new_path = clean_path(line.substr(4));
      ensure_unique_path(file->new_path, lineno);
      continue;
    }
    if (line.rfind("@@ -", 0) == 0) {
      close_hunk();
      if (!file) throw MalformedDiff(lineno, "hunk outside any file");
      Hunk h;
      if (!parse_hunk_header(line, h)) throw MalformedDiff(lineno, "bad hunk header");
      file->hunks.push_back(std::move(h));
      hunk = &file->hunks.back();
      counters = {};
      hunk_header_line = lineno;
      continue;
    }

    if (hunk) {
      bool body_done = counters.old_seen >= hunk->old_len && counters.new_seen >= hunk->new_len;
      if (!line.empty() && line[0] == '\\') {
        // "\ No newline at end of file" refers to the previous body line.
        if (!hunk->lines.empty()) hunk->lines.back().no_newline = true;
        continue;
      }
      if (body_done) {
        close_hunk();
        // Fall through: this line belongs to headers or junk between files.
      } else {
        char marker = line.empty() ? ' ' : line[0];
        std::string body = line.empty() ? std::string() : line.substr(1);
        switch (marker) {
          case ' ':
            hunk->lines.push_back({LineTag::Context, body, false});
            ++counters.old_seen;
            ++counters.new_seen;
            break;
          case '+':
            hunk->lines.push_back({LineTag::Added, body, false});
            ++counters.new_seen;
            break;
          case '-':
            hunk->lines.push_back({LineTag::Deleted, body, false});
            ++counters.old_seen;
            break;
          default:
            throw MalformedDiff(lineno, "unexpected hunk body marker");
        }
        if (counters.old_seen > hunk->old_len || counters.new_seen > hunk->new_len) {
          throw MalformedDiff(hunk_header_line, "hunk body exceeds header counts");
        }
        continue;
      }
    }
    // Lines outside hunks (index, mode, rename metadata, mail headers) are skipped.
  }
  close_hunk();
  return out;
}

std::string apply_hunks(const std::string& old_text, const FileDiff& file) {
  if (file.binary) throw ApplyMismatch("cannot apply hunks to a binary file");

  LineSplit old_lines = split_lines(old_text);
  std::vector<std::string> out;
  bool out_final_newline = true;
  std::size_t cursor = 0;  // 0-based index into old_lines

  for (const auto& hunk : file.hunks) {
    // With old_len == 0 the header names the line *before* the insertion.
    std::size_t first_old = hunk.old_len == 0 ? hunk.old_start : hunk.old_start - 1;
    if (first_old < cursor || first_old > old_lines.lines.size()) {
      throw ApplyMismatch("hunk out of order or beyond end of file");
    }
    while (cursor < first_old) {
      out.push_back(old_lines.lines[cursor]);
      ++cursor;
    }
    for (const auto& line : hunk.lines) {
      switch (line.tag) {
        case LineTag::Context:
          if (cursor >= old_lines.lines.size() || old_lines.lines[cursor] != line.text) {
            throw ApplyMismatch("context mismatch at old line " + std::to_string(cursor + 1));
          }
          out.push_back(line.text);
          if (line.no_newline) out_final_newline = false;
          ++cursor;
          break;
        case LineTag::Deleted:
          if (cursor >= old_lines.lines.size() || old_lines.lines[cursor] != line.text) {
            throw ApplyMismatch("delete mismatch at old line " + std::to_string(cursor + 1));
          }
          ++cursor;
          break;
        case LineTag::Added:
          out.push_back(line.text);
          if (line.no_newline) out_final_newline = false;
          break;
      }
    }
  }
  while (cursor < old_lines.lines.size()) {
    out.push_back(old_lines.lines[cursor]);
    ++cursor;
  }
  // The pre-image's missing final newline survives when its last line does.
  if (!old_lines.final_newline && !old_lines.lines.empty() && !out.empty() &&
      out.back() == old_lines.lines.back() && cursor == old_lines.lines.size()) {
    out_final_newline = false;
  }
  LineSplit result{std::move(out), out_final_newline};
  if (result.lines.empty()) return "";
  return join_lines(result);
}

std::string render_file_diff(const FileDiff& file) {
  std::string out;
  out += "diff --git a/" + (file.old_path == "/dev/null" ? file.new_path : file.old_path) +
         " b/" + (file.new_path == "/dev/null" ? file.old_path : file.new_path) + "\n";
  if (file.binary) {
    out += "Binary files a/" + file.old_path + " and b/" + file.new_path + " differ\n";
    return out;
  }
  out += "--- " + (file.old_path == "/dev/null" ? file.old_path : "a/" + file.old_path) + "\n";
  out += "+++ " + (file.new_path == "/dev/null" ? file.new_path : "b/" + file.new_path) + "\n";
  for (const auto& hunk : file.hunks) {
    out += "@@ -" + std::to_string(hunk.old_start) + "," + std::to_string(hunk.old_len) + " +" +
           std::to_string(hunk.new_start) + "," + std::to_string(hunk.new_len) + " @@\n";
    for (const auto& line : hunk.lines) {
      char marker = line.tag == LineTag::Context ? ' ' : line.tag == LineTag::Added ? '+' : '-';
      out += marker;
      out += line.text;
      out += '\n';
      if (line.no_newline) out += "\\ No newline at end of file\n";
    }
  }
  return out;
}

}  // namespace vulnbench
