#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vulnbench/types.hpp"
#include "vulnbench/util.hpp"

namespace vulnbench {

// One vulnerability's metadata. One record per (CVE, fix commit); a CVE fixed
// by several commits appears as several records.
struct VulnRecord {
  std::string record_id;
  std::string cve_id;      // "CVE-YYYY-NNNN…"
  std::string cwe_id;      // ground-truth class, "CWE-N"
  std::vector<std::string> extra_cwes;  // additional assignments, kept aside
  std::string project;
  std::string repo;        // path or URL of the source repository
  std::string fix_commit;  // 40 lowercase hex chars
  std::string description;
  int discovery_year = 0;
  std::optional<Date> disclosure_date;
};

struct CutoffPolicy {
  std::string model_id;
  Date cutoff_date;
};

struct SchemaViolation {
  std::size_t entry_index = 0;  // 0-based position in the metadata file
  std::string field;
  std::string message;
};

struct ParseReport {
  std::vector<VulnRecord> records;
  std::vector<SchemaViolation> rejects;
};

class FileUnreadable : public Error {
public:
  using Error::Error;
};

// Raised when a non-empty metadata file yields no valid record at all.
class AllEntriesInvalid : public Error {
public:
  using Error::Error;
};

class MissingDate : public Error {
public:
  using Error::Error;
};

// Pluggable source of raw metadata entries, so an online crawler can replace
// the offline file without touching the ingestion path.
class MetadataFetcher {
public:
  virtual ~MetadataFetcher() = default;
  // Returns the JSON object text for one record id, or nullopt when unknown.
  virtual std::optional<std::string> fetch(const std::string& record_id) = 0;
};

// Fetcher over a JSON-lines metadata file, keyed by record_id.
class JsonlFetcher : public MetadataFetcher {
public:
  explicit JsonlFetcher(const std::string& path);
  std::optional<std::string> fetch(const std::string& record_id) override;

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Validates one raw JSON entry into a record. The entry index is only used
// for reject reporting.
std::optional<VulnRecord> validate_entry(const std::string& json_text, std::size_t index,
                                         std::vector<SchemaViolation>& rejects);

// Reads a UTF-8 JSON-lines metadata file. Invalid entries land in the rejects
// report; they are never silently dropped. Throws FileUnreadable, and
// AllEntriesInvalid when every entry of a non-empty file is rejected.
ParseReport parse_metadata(const std::string& path);

std::string serialize_record(const VulnRecord& record);
std::string serialize_records(const std::vector<VulnRecord>& records);
ParseReport parse_metadata_text(const std::string& text);

// Effective date used for leakage splitting: disclosure_date when present,
// else January 1 of discovery_year.
Date effective_date(const VulnRecord& record);

// Partitions records by the model's training cutoff. `post` holds exactly the
// records strictly after cutoff_date; the halves are disjoint and cover the
// input. Throws MissingDate when a record carries neither date field.
std::pair<std::vector<VulnRecord>, std::vector<VulnRecord>> split_by_cutoff(
    const std::vector<VulnRecord>& records, const CutoffPolicy& policy);

// Cutoff policy file: JSON object mapping model_id -> ISO date.
std::vector<CutoffPolicy> parse_cutoff_policies(const std::string& json_text);

}  // namespace vulnbench
