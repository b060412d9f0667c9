#include "vulnbench/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>

namespace vulnbench {

using nlohmann::json;

namespace {

bool is_cve_id(const std::string& s) {
  // CVE-YYYY-NNNN with a 4+ digit sequence number.
  if (s.size() < 13 || s.compare(0, 4, "CVE-") != 0) return false;
  for (int i = 4; i < 8; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  if (s[8] != '-') return false;
  if (s.size() < 13) return false;
  for (std::size_t i = 9; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool is_cwe_id(const std::string& s) {
  if (s.size() < 5 || s.compare(0, 4, "CWE-") != 0) return false;
  for (std::size_t i = 4; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool is_commit_hash(const std::string& s) {
  if (s.size() != 40) return false;
  for (char c : s) {
    bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!ok) return false;
  }
  return true;
}

// Splits a cwe field that may be a string ("CWE-119" or "CWE-119, CWE-20")
// or an array of strings. First entry is the ground truth, the rest are kept
// in extra_cwes.
bool extract_cwes(const json& value, std::string& primary, std::vector<std::string>& extra) {
  std::vector<std::string> all;
  if (value.is_string()) {
    for (const auto& part : split(value.get<std::string>(), ',')) {
      std::string t = trim(part);
      if (!t.empty()) all.push_back(t);
    }
  } else if (value.is_array()) {
    for (const auto& item : value) {
      if (!item.is_string()) return false;
      std::string t = trim(item.get<std::string>());
      if (!t.empty()) all.push_back(t);
    }
  } else {
    return false;
  }
  if (all.empty()) return false;
  primary = all.front();
  extra.assign(all.begin() + 1, all.end());
  return true;
}

}  // namespace

std::optional<VulnRecord> validate_entry(const std::string& json_text, std::size_t index,
                                         std::vector<SchemaViolation>& rejects) {
  json obj = json::parse(json_text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    rejects.push_back({index, "", "not a JSON object"});
    return std::nullopt;
  }

  auto reject = [&](const std::string& field, const std::string& msg) {
    rejects.push_back({index, field, msg});
  };

  VulnRecord r;
  auto get_string = [&](const char* key, std::string& out) {
    if (!obj.contains(key) || !obj[key].is_string() || obj[key].get<std::string>().empty()) {
      reject(key, "missing or empty");
      return false;
    }
    out = obj[key].get<std::string>();
    return true;
  };

  bool ok = true;
  ok &= get_string("record_id", r.record_id);
  ok &= get_string("cve_id", r.cve_id);
  ok &= get_string("project", r.project);
  ok &= get_string("repo", r.repo);
  ok &= get_string("fix_commit", r.fix_commit);
  ok &= get_string("description", r.description);

  if (!obj.contains("cwe_id") || !extract_cwes(obj["cwe_id"], r.cwe_id, r.extra_cwes)) {
    reject("cwe_id", "missing or malformed");
    ok = false;
  }
  if (!obj.contains("discovery_year") || !obj["discovery_year"].is_number_integer()) {
    reject("discovery_year", "missing or not an integer");
    ok = false;
  } else {
    r.discovery_year = obj["discovery_year"].get<int>();
  }
  if (obj.contains("disclosure_date") && !obj["disclosure_date"].is_null()) {
    if (!obj["disclosure_date"].is_string()) {
      reject("disclosure_date", "not a string");
      ok = false;
    } else {
      auto d = parse_date(obj["disclosure_date"].get<std::string>());
      if (!d) {
        reject("disclosure_date", "not an ISO-8601 date");
        ok = false;
      } else {
        r.disclosure_date = *d;
      }
    }
  }

  if (!ok) return std::nullopt;

  if (!is_cve_id(r.cve_id)) {
    reject("cve_id", "does not match CVE-YYYY-NNNN");
    return std::nullopt;
  }
  if (!is_cwe_id(r.cwe_id)) {
    reject("cwe_id", "does not match CWE-N");
    return std::nullopt;
  }
  if (!is_commit_hash(r.fix_commit)) {
    reject("fix_commit", "not 40 lowercase hex characters");
    return std::nullopt;
  }
  if (r.discovery_year < 1999) {
    reject("discovery_year", "before 1999");
    return std::nullopt;
  }
  return r;
}

ParseReport parse_metadata_text(const std::string& text) {
  ParseReport report;
  std::size_t entries = 0;
  std::size_t index = 0;
  for (const auto& line : split_lines(text).lines) {
    std::string t = trim(line);
    if (t.empty()) {
      ++index;
      continue;
    }
    ++entries;
    if (auto record = validate_entry(t, index, report.rejects)) {
      report.records.push_back(std::move(*record));
    }
    ++index;
  }
  if (entries > 0 && report.records.empty()) {
    throw AllEntriesInvalid("metadata: all " + std::to_string(entries) + " entries invalid");
  }
  return report;
}

ParseReport parse_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot open metadata file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_metadata_text(text);
}

std::string serialize_record(const VulnRecord& r) {
  json obj;
  obj["record_id"] = r.record_id;
  obj["cve_id"] = r.cve_id;
  if (r.extra_cwes.empty()) {
    obj["cwe_id"] = r.cwe_id;
  } else {
    json arr = json::array();
    arr.push_back(r.cwe_id);
    for (const auto& c : r.extra_cwes) arr.push_back(c);
    obj["cwe_id"] = arr;
  }
  obj["project"] = r.project;
  obj["repo"] = r.repo;
  obj["fix_commit"] = r.fix_commit;
  obj["description"] = r.description;
  obj["discovery_year"] = r.discovery_year;
  if (r.disclosure_date) obj["disclosure_date"] = r.disclosure_date->to_string();
  return obj.dump();
}

std::string serialize_records(const std::vector<VulnRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

JsonlFetcher::JsonlFetcher(const std::string& path) {
  std::string text = read_file(path);
  for (const auto& line : split_lines(text).lines) {
    std::string t = trim(line);
    if (t.empty()) continue;
    json obj = json::parse(t, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) continue;
    if (obj.contains("record_id") && obj["record_id"].is_string()) {
      entries_.emplace_back(obj["record_id"].get<std::string>(), t);
    }
  }
}

std::optional<std::string> JsonlFetcher::fetch(const std::string& record_id) {
  for (const auto& [id, text] : entries_) {
    if (id == record_id) return text;
  }
  return std::nullopt;
}

Date effective_date(const VulnRecord& record) {
  if (record.disclosure_date) return *record.disclosure_date;
  if (record.discovery_year > 0) return Date{record.discovery_year, 1, 1};
  throw MissingDate("record " + record.record_id + " has neither disclosure_date nor discovery_year");
}

std::pair<std::vector<VulnRecord>, std::vector<VulnRecord>> split_by_cutoff(
    const std::vector<VulnRecord>& records, const CutoffPolicy& policy) {
  std::vector<VulnRecord> pre;
  std::vector<VulnRecord> post;
  for (const auto& r : records) {
    if (effective_date(r) > policy.cutoff_date) {
      post.push_back(r);
    } else {
      pre.push_back(r);
    }
  }
  return {std::move(pre), std::move(post)};
}

std::vector<CutoffPolicy> parse_cutoff_policies(const std::string& json_text) {
  json obj = json::parse(json_text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw Error("cutoff policy: not a JSON object");
  std::vector<CutoffPolicy> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!it.value().is_string()) throw Error("cutoff policy: date for " + it.key() + " not a string");
    auto d = parse_date(it.value().get<std::string>());
    if (!d) throw Error("cutoff policy: unparseable date for " + it.key());
    out.push_back({it.key(), *d});
  }
  return out;
}

}  // namespace vulnbench
