#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vulnbench {

// Calendar date with value-order comparison. Parsed from ISO-8601 "YYYY-MM-DD".
struct Date {
  int year = 0;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;
  std::string to_string() const;
};

std::optional<Date> parse_date(std::string_view iso);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool starts_with_ci(std::string_view text, std::string_view prefix);
std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0);
std::vector<std::string> split(std::string_view s, char sep);

// Splits text into lines without terminators; reports whether the text ended
// with a newline so a join can reproduce the original bytes.
struct LineSplit {
  std::vector<std::string> lines;
  bool final_newline = true;
};

LineSplit split_lines(std::string_view text);
std::string join_lines(const LineSplit& split);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// Current UTC time formatted as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace vulnbench
