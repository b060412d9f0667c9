#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vulnbench/types.hpp"

namespace vulnbench {

enum class LineTag { Context, Added, Deleted };

struct HunkLine {
  LineTag tag = LineTag::Context;
  std::string text;  // without the leading marker and without the newline
  // Set when the diff carried "\ No newline at end of file" after this line.
  bool no_newline = false;
};

struct Hunk {
  std::size_t old_start = 0;  // 1-based; 0 only valid with old_len == 0
  std::size_t old_len = 0;
  std::size_t new_start = 0;
  std::size_t new_len = 0;
  std::vector<HunkLine> lines;
};

struct FileDiff {
  std::string old_path;  // "/dev/null" for added files
  std::string new_path;  // "/dev/null" for deleted files
  bool binary = false;
  std::vector<Hunk> hunks;

  // Path used to label this file in blocks and inventories.
  const std::string& display_path() const {
    return new_path == "/dev/null" ? old_path : new_path;
  }
};

struct DiffSet {
  std::vector<FileDiff> files;
};

class MalformedDiff : public Error {
public:
  MalformedDiff(std::size_t line_number, const std::string& what)
      : Error("malformed diff at line " + std::to_string(line_number) + ": " + what),
        line_number(line_number) {}
  std::size_t line_number;
};

class ApplyMismatch : public Error {
public:
  using Error::Error;
};

// Parses a git-style unified diff. Every added/deleted/context line is
// attributed to exactly one hunk of one file; binary markers yield a FileDiff
// flagged binary with zero hunks. Hunk bodies are checked against their
// header lengths.
DiffSet parse_unified_diff(const std::string& text);

// Applies a file's hunks to its pre-image, reproducing the post-image.
// Context and deleted lines must match the pre-image exactly.
std::string apply_hunks(const std::string& old_text, const FileDiff& file);

// Renders one FileDiff back to unified-diff text (git header style).
std::string render_file_diff(const FileDiff& file);

}  // namespace vulnbench
