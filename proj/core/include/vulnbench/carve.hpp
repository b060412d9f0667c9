#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vulnbench {

// A top-level function definition located in one source file.
struct FunctionSpan {
  std::string name;            // last name component ("Cleanup")
  std::string qualified_name;  // full chain ("WindowsGamepadService::Cleanup")
  std::string file;            // filled in by callers that know the path
  std::size_t start_line = 0;  // 1-based, inclusive
  std::size_t end_line = 0;
  std::size_t begin = 0;  // byte offsets into the source, half-open
  std::size_t end = 0;
};

struct CarveResult {
  std::vector<FunctionSpan> spans;  // pairwise disjoint, sorted by position
  std::vector<std::string> diagnostics;
};

// Replaces comments, string/char literal contents, and preprocessor lines
// with spaces, preserving length and newlines so offsets and line numbers
// stay aligned with the original text.
std::string sanitize_source(std::string_view source);

// Heuristic scanner for C/C++-family sources. Recognizes
// `identifier (params) {` at top level (namespace and extern "C" blocks are
// transparent), with qualifiers, scope operators, ctor initializer lists,
// trailing return types, and operator names. The source need not compile;
// unparseable regions simply fall outside all spans. K&R definitions and
// functions produced entirely by macros are not recognized.
CarveResult carve_functions(std::string_view source);

// Span lookup by 1-based line number; returns index into spans or npos.
std::size_t span_covering_line(const std::vector<FunctionSpan>& spans, std::size_t line);

inline constexpr std::size_t span_npos = static_cast<std::size_t>(-1);

}  // namespace vulnbench
