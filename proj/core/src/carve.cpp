#include "vulnbench/carve.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace vulnbench {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

// Raw string literals: the '"' is preceded by R with an optional u8/u/U/L prefix.
bool raw_string_at(std::string_view s, std::size_t quote) {
  if (quote == 0 || s[quote - 1] != 'R') return false;
  std::size_t r = quote - 1;
  if (r > 0 && ident_char(s[r - 1])) {
    // Allow u8R", uR", UR", LR" but not fooR".
    std::size_t p = r;
    while (p > 0 && ident_char(s[p - 1])) --p;
    std::string_view prefix = s.substr(p, r - p);
    if (prefix != "u8" && prefix != "u" && prefix != "U" && prefix != "L") return false;
  }
  return true;
}

}  // namespace

std::string sanitize_source(std::string_view src) {
  std::string out(src);
  std::size_t i = 0;
  const std::size_t n = src.size();
  bool line_has_code = false;  // non-whitespace seen on the current line

  auto blank = [&](std::size_t at) {
    if (out[at] != '\n') out[at] = ' ';
  };

  while (i < n) {
    char c = src[i];
    if (c == '\n') {
      line_has_code = false;
      ++i;
      continue;
    }
    if (c == '#' && !line_has_code) {
      // Preprocessor directive: blank to end of line, honoring continuations.
      while (i < n) {
        if (src[i] == '\\' && i + 1 < n && src[i + 1] == '\n') {
          blank(i);
          i += 2;
          continue;
        }
        if (src[i] == '\n') break;
        blank(i);
        ++i;
      }
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') blank(i), ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      blank(i), blank(i + 1);
      i += 2;
      while (i < n && !(src[i] == '*' && i + 1 < n && src[i + 1] == '/')) blank(i), ++i;
      if (i < n) blank(i), blank(i + 1), i += 2;
      continue;
    }
    if (c == '"' && raw_string_at(src, i)) {
      // R"delim( ... )delim"
      std::size_t d_begin = i + 1;
      std::size_t d_end = d_begin;
      while (d_end < n && src[d_end] != '(' && src[d_end] != '\n') ++d_end;
      std::string closer = ")" + std::string(src.substr(d_begin, d_end - d_begin)) + "\"";
      std::size_t stop = src.find(closer, d_end);
      std::size_t lit_end = (stop == std::string_view::npos) ? n : stop + closer.size();
      for (std::size_t k = i; k < lit_end; ++k) blank(k);
      i = lit_end;
      line_has_code = true;
      continue;
    }
    if (c == '"' || c == '\'') {
      char q = c;
      blank(i), ++i;
      while (i < n && src[i] != q && src[i] != '\n') {
        if (src[i] == '\\' && i + 1 < n) blank(i), ++i;
        blank(i), ++i;
      }
      if (i < n && src[i] == q) blank(i), ++i;
      line_has_code = true;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) line_has_code = true;
    ++i;
  }
  return out;
}

namespace {

struct Tok {
  enum Kind { End, Ident, Punct } kind = End;
  std::size_t begin = 0;
  std::size_t end = 0;
};

Tok next_token(std::string_view s, std::size_t& pos) {
  const std::size_t n = s.size();
  while (pos < n && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos >= n) return {Tok::End, n, n};
  std::size_t b = pos;
  if (ident_start(s[pos])) {
    while (pos < n && ident_char(s[pos])) ++pos;
    return {Tok::Ident, b, pos};
  }
  ++pos;
  return {Tok::Punct, b, b + 1};
}

// Skips a balanced (...) group; only parentheses count, so braces inside
// default arguments or macro invocations do not disturb matching.
std::size_t skip_parens(std::string_view s, std::size_t open) {
  std::size_t depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::size_t skip_braces(std::string_view s, std::size_t open) {
  std::size_t depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    else if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::size_t skip_attr(std::string_view s, std::size_t open) {  // open points at the first '['
  std::size_t depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    else if (s[i] == ']' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

// Statement tokens with paren/brace/attribute groups folded into single
// entries, as seen between one boundary and the next '{'.
struct STok {
  enum Kind { Ident, OperatorName, Punct, ParenGroup, BraceGroup, Attr } kind;
  std::size_t begin;
  std::size_t end;
};

const std::unordered_set<std::string_view>& name_reject_set() {
  static const std::unordered_set<std::string_view> kSet = {
      "if",    "for",      "while",  "switch",        "return",        "do",     "else",
      "catch", "sizeof",   "alignof", "case",         "goto",          "new",    "delete",
      "throw", "decltype", "using",  "static_assert", "_Static_assert", "asm",   "typeof",
      "defined", "__asm__", "alignas", "noexcept", "__attribute__", "__attribute",
      "__declspec"};
  return kSet;
}

bool is_operator_symbol_char(char c) {
  return std::string_view("+-*/%^&|~!=<>,.").find(c) != std::string_view::npos;
}

// Folds "operator" plus its symbol/type into one pseudo-identifier ending at
// the '(' of the parameter list.
std::size_t fold_operator_name(std::string_view s, std::size_t after_kw) {
  std::size_t pos = after_kw;
  auto skip_ws = [&] { while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos; };
  skip_ws();
  if (pos >= s.size()) return after_kw;
  if (s[pos] == '(') {
    // operator() — valid only when a parameter list follows the "()".
    std::size_t close = pos + 1;
    while (close < s.size() && std::isspace(static_cast<unsigned char>(s[close]))) ++close;
    if (close < s.size() && s[close] == ')') {
      std::size_t probe = close + 1;
      while (probe < s.size() && std::isspace(static_cast<unsigned char>(s[probe]))) ++probe;
      if (probe < s.size() && s[probe] == '(') return close + 1;
    }
    return after_kw;
  }
  if (s[pos] == '[') {  // operator[]
    std::size_t close = pos + 1;
    while (close < s.size() && std::isspace(static_cast<unsigned char>(s[close]))) ++close;
    if (close < s.size() && s[close] == ']') return close + 1;
    return after_kw;
  }
  if (is_operator_symbol_char(s[pos])) {
    while (pos < s.size() && is_operator_symbol_char(s[pos])) ++pos;
    return pos;
  }
  // Conversion operator: consume type tokens until the parameter '('.
  std::size_t last = pos;
  while (pos < s.size()) {
    skip_ws();
    if (pos >= s.size() || s[pos] == '(') break;
    if (ident_start(s[pos])) {
      while (pos < s.size() && ident_char(s[pos])) ++pos;
      last = pos;
    } else if (s[pos] == '*' || s[pos] == '&' || s[pos] == ':' || s[pos] == '<' || s[pos] == '>') {
      ++pos;
      last = pos;
    } else {
      return after_kw;
    }
  }
  return last;
}

// Tokenizes [begin, stop) into statement tokens. Returns false on an
// unbalanced group (which makes the statement unanalyzable).
bool scan_statement(std::string_view s, std::size_t begin, std::size_t stop, std::vector<STok>& out) {
  std::size_t pos = begin;
  while (true) {
    std::size_t before = pos;
    Tok t = next_token(s, pos);
    if (t.kind == Tok::End || t.begin >= stop) {
      pos = before;
      return true;
    }
    if (t.kind == Tok::Ident) {
      if (s.substr(t.begin, t.end - t.begin) == "operator") {
        std::size_t name_end = fold_operator_name(s, t.end);
        out.push_back({STok::OperatorName, t.begin, name_end});
        pos = name_end;
        continue;
      }
      out.push_back({STok::Ident, t.begin, t.end});
      continue;
    }
    char c = s[t.begin];
    if (c == '(') {
      std::size_t close = skip_parens(s, t.begin);
      if (close == std::string_view::npos || close > stop) return false;
      out.push_back({STok::ParenGroup, t.begin, close});
      pos = close;
      continue;
    }
    if (c == '{') {
      std::size_t close = skip_braces(s, t.begin);
      if (close == std::string_view::npos || close > stop) return false;
      out.push_back({STok::BraceGroup, t.begin, close});
      pos = close;
      continue;
    }
    if (c == '[' && t.begin + 1 < s.size() && s[t.begin + 1] == '[') {
      std::size_t close = skip_attr(s, t.begin);
      if (close == std::string_view::npos || close > stop) return false;
      out.push_back({STok::Attr, t.begin, close});
      pos = close;
      continue;
    }
    out.push_back({STok::Punct, t.begin, t.end});
  }
}

struct HeaderInfo {
  bool is_function = false;
  bool has_init_list = false;
  std::size_t init_colon = 0;  // byte offset of the ':' when has_init_list
  std::string name;
  std::string qualified_name;
};

bool stok_text_is(std::string_view s, const STok& t, std::string_view want) {
  return t.kind == STok::Ident && s.substr(t.begin, t.end - t.begin) == want;
}

// Checks that the tokens after the parameter list form a valid run of
// trailing qualifiers up to the function body.
bool check_trailing(std::string_view s, const std::vector<STok>& toks, std::size_t from,
                    bool& init_list, std::size_t& init_colon) {
  static const std::unordered_set<std::string_view> kQualifiers = {
      "const", "volatile", "override", "final", "mutable", "restrict", "__restrict", "__restrict__"};
  std::size_t i = from;
  while (i < toks.size()) {
    const STok& t = toks[i];
    if (t.kind == STok::Attr) { ++i; continue; }
    if (t.kind == STok::Ident || t.kind == STok::OperatorName) {
      std::string_view text = s.substr(t.begin, t.end - t.begin);
      if (kQualifiers.count(text)) { ++i; continue; }
      if (text == "noexcept" || text == "throw") {
        ++i;
        if (i < toks.size() && toks[i].kind == STok::ParenGroup) ++i;
        continue;
      }
      if (text.substr(0, 11) == "__attribute") {
        ++i;
        if (i < toks.size() && toks[i].kind == STok::ParenGroup) { ++i; continue; }
        return false;
      }
      return false;
    }
    if (t.kind == STok::Punct) {
      char c = s[t.begin];
      if (c == '&') { ++i; continue; }  // ref-qualifiers
      if (c == '-' && i + 1 < toks.size() && toks[i + 1].kind == STok::Punct && s[toks[i + 1].begin] == '>') {
        return true;  // trailing return type; the rest is the type
      }
      if (c == ':') {
        init_list = true;
        init_colon = t.begin;
        return true;
      }
      return false;
    }
    return false;  // bare paren/brace group after the parameter list
  }
  return true;
}

// Builds the (qualified) name from the tokens preceding the parameter list.
bool extract_name(std::string_view s, const std::vector<STok>& toks, std::size_t group_idx, HeaderInfo& out) {
  if (group_idx == 0) return false;
  std::size_t j = group_idx - 1;
  const STok& last = toks[j];
  std::size_t chain_begin = last.begin;
  std::string name;
  if (last.kind == STok::OperatorName) {
    name = std::string(s.substr(last.begin, last.end - last.begin));
  } else if (last.kind == STok::Ident) {
    name = std::string(s.substr(last.begin, last.end - last.begin));
    if (name_reject_set().count(name)) return false;
    if (j >= 1 && toks[j - 1].kind == STok::Punct && s[toks[j - 1].begin] == '~') {
      name = "~" + name;
      --j;
      chain_begin = toks[j].begin;
    }
  } else {
    return false;
  }
  // Walk back over `Qualifier::` chains, including template arguments.
  while (j >= 2 && toks[j - 1].kind == STok::Punct && s[toks[j - 1].begin] == ':' &&
         toks[j - 2].kind == STok::Punct && s[toks[j - 2].begin] == ':') {
    std::size_t k = j - 2;  // index of the first ':' token
    if (k == 0) break;
    std::size_t q = k - 1;
    if (toks[q].kind == STok::Punct && s[toks[q].begin] == '>') {
      int depth = 0;
      bool matched = false;
      while (true) {
        if (toks[q].kind == STok::Punct && s[toks[q].begin] == '>') ++depth;
        else if (toks[q].kind == STok::Punct && s[toks[q].begin] == '<' && --depth == 0) {
          matched = true;
          break;
        }
        if (q == 0) break;
        --q;
      }
      if (!matched || q == 0) break;
      --q;  // the identifier before '<'
    }
    if (toks[q].kind != STok::Ident) break;
    chain_begin = toks[q].begin;
    j = q;
  }
  out.name = name;
  std::string qualified(s.substr(chain_begin, toks[group_idx - 1].end - chain_begin));
  // Collapse whitespace runs so "Foo :: bar" and "Foo::bar" agree.
  std::string squeezed;
  bool in_ws = false;
  for (char c : qualified) {
    if (std::isspace(static_cast<unsigned char>(c))) { in_ws = true; continue; }
    if (in_ws && !squeezed.empty() && ident_char(squeezed.back()) && ident_char(c)) squeezed += ' ';
    in_ws = false;
    squeezed += c;
  }
  out.qualified_name = squeezed;
  return true;
}

HeaderInfo analyze_header(std::string_view s, std::size_t stmt_begin, std::size_t brace_pos) {
  HeaderInfo info;
  std::vector<STok> toks;
  if (!scan_statement(s, stmt_begin, brace_pos, toks)) return info;
  // Candidate parameter lists are paren groups directly preceded by a name.
  // Later shapes that also look like "name(...)" — throw(), __attribute__
  // specs, constructor-initializer calls — are tried first and fall back to
  // an earlier group when their trailing tokens or name do not fit.
  for (std::size_t i = toks.size(); i-- > 1;) {
    if (toks[i].kind != STok::ParenGroup) continue;
    if (toks[i - 1].kind != STok::Ident && toks[i - 1].kind != STok::OperatorName) continue;
    HeaderInfo candidate;
    if (!check_trailing(s, toks, i + 1, candidate.has_init_list, candidate.init_colon)) continue;
    if (!extract_name(s, toks, i, candidate)) continue;
    candidate.is_function = true;
    return candidate;
  }
  return info;
}

// Walks a constructor initializer list from its ':' and returns the byte
// offset of the body '{', or npos if the shape does not match.
std::size_t walk_init_list(std::string_view s, std::size_t colon) {
  std::size_t pos = colon + 1;
  while (true) {
    Tok t = next_token(s, pos);
    if (t.kind != Tok::Ident) return std::string_view::npos;
    // Qualified or templated member/base name.
    while (true) {
      std::size_t save = pos;
      Tok p = next_token(s, pos);
      if (p.kind == Tok::Punct && s[p.begin] == ':') {
        Tok p2 = next_token(s, pos);
        if (p2.kind == Tok::Punct && s[p2.begin] == ':') {
          Tok id = next_token(s, pos);
          if (id.kind != Tok::Ident) return std::string_view::npos;
          continue;
        }
        return std::string_view::npos;
      }
      if (p.kind == Tok::Punct && s[p.begin] == '<') {
        int depth = 1;
        while (depth > 0) {
          Tok a = next_token(s, pos);
          if (a.kind == Tok::End) return std::string_view::npos;
          if (a.kind == Tok::Punct && s[a.begin] == '<') ++depth;
          if (a.kind == Tok::Punct && s[a.begin] == '>') --depth;
        }
        continue;
      }
      pos = save;
      break;
    }
    Tok open = next_token(s, pos);
    if (open.kind != Tok::Punct) return std::string_view::npos;
    if (s[open.begin] == '(') {
      std::size_t close = skip_parens(s, open.begin);
      if (close == std::string_view::npos) return std::string_view::npos;
      pos = close;
    } else if (s[open.begin] == '{') {
      std::size_t close = skip_braces(s, open.begin);
      if (close == std::string_view::npos) return std::string_view::npos;
      pos = close;
    } else {
      return std::string_view::npos;
    }
    while (true) {  // pack expansions: Base(args)...
      std::size_t save = pos;
      Tok d = next_token(s, pos);
      if (d.kind == Tok::Punct && s[d.begin] == '.') continue;
      pos = save;
      break;
    }
    Tok sep = next_token(s, pos);
    if (sep.kind == Tok::Punct && s[sep.begin] == ',') continue;
    if (sep.kind == Tok::Punct && s[sep.begin] == '{') return sep.begin;
    return std::string_view::npos;
  }
}

std::vector<std::size_t> line_starts(std::string_view s) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] == '\n') starts.push_back(i + 1);
  return starts;
}

std::size_t line_of(const std::vector<std::size_t>& starts, std::size_t offset) {
  auto it = std::upper_bound(starts.begin(), starts.end(), offset);
  return static_cast<std::size_t>(it - starts.begin());  // 1-based
}

}  // namespace

CarveResult carve_functions(std::string_view source) {
  CarveResult result;
  const std::string clean = sanitize_source(source);
  const std::string_view s = clean;
  const auto starts = line_starts(s);

  std::size_t pos = 0;
  std::size_t stmt_start = std::string_view::npos;
  std::size_t transparent_depth = 0;

  auto record_diag = [&](std::size_t at, const std::string& what) {
    result.diagnostics.push_back("line " + std::to_string(line_of(starts, std::min(at, s.size() ? s.size() - 1 : 0))) + ": " + what);
  };

  while (true) {
    Tok t = next_token(s, pos);
    if (t.kind == Tok::End) break;
    if (stmt_start == std::string_view::npos) stmt_start = t.begin;

    if (t.kind == Tok::Ident) {
      std::string_view text = s.substr(t.begin, t.end - t.begin);
      if (text == "namespace") {
        // Optional name (possibly nested a::b), then '{' opens a transparent
        // scope; '=' is a namespace alias, handled as an ordinary statement.
        std::size_t probe = pos;
        while (true) {
          Tok nt = next_token(s, probe);
          if (nt.kind == Tok::Ident || (nt.kind == Tok::Punct && s[nt.begin] == ':')) continue;
          if (nt.kind == Tok::Punct && s[nt.begin] == '{') {
            ++transparent_depth;
            pos = probe;
            stmt_start = std::string_view::npos;
          }
          break;
        }
        continue;
      }
      if (text == "extern") {
        std::size_t probe = pos;
        Tok nt = next_token(s, probe);
        if (nt.kind == Tok::Punct && s[nt.begin] == '{') {
          ++transparent_depth;
          pos = probe;
          stmt_start = std::string_view::npos;
        }
        continue;
      }
      continue;
    }

    char c = s[t.begin];
    if (c == ';') {
      stmt_start = std::string_view::npos;
      continue;
    }
    if (c == '(') {
      std::size_t close = skip_parens(s, t.begin);
      if (close == std::string_view::npos) {
        record_diag(t.begin, "unbalanced parenthesis");
        break;
      }
      pos = close;
      continue;
    }
    if (c == '}') {
      if (transparent_depth > 0) {
        --transparent_depth;
      } else {
        record_diag(t.begin, "unmatched closing brace");
      }
      stmt_start = std::string_view::npos;
      continue;
    }
    if (c != '{') continue;

    HeaderInfo header = analyze_header(s, stmt_start, t.begin);
    std::size_t body_open = t.begin;
    if (header.is_function && header.has_init_list) {
      body_open = walk_init_list(s, header.init_colon);
      if (body_open == std::string_view::npos) header.is_function = false;
    }
    if (!header.is_function) {
      std::size_t close = skip_braces(s, t.begin);
      if (close == std::string_view::npos) {
        record_diag(t.begin, "unbalanced braces");
        break;
      }
      pos = close;  // statement continues; a later ';' resets it
      continue;
    }
    std::size_t close = skip_braces(s, body_open);
    if (close == std::string_view::npos) {
      record_diag(body_open, "unbalanced braces in function body");
      break;
    }
    FunctionSpan span;
    span.name = header.name;
    span.qualified_name = header.qualified_name;
    span.begin = stmt_start;
    span.end = close;
    span.start_line = line_of(starts, stmt_start);
    span.end_line = line_of(starts, close - 1);
    result.spans.push_back(std::move(span));
    pos = close;
    stmt_start = std::string_view::npos;
  }
  return result;
}

std::size_t span_covering_line(const std::vector<FunctionSpan>& spans, std::size_t line) {
  for (std::size_t i = 0; i < spans.size(); ++i)
    if (spans[i].start_line <= line && line <= spans[i].end_line) return i;
  return span_npos;
}

}  // namespace vulnbench
