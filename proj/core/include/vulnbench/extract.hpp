#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnbench/corpus.hpp"
#include "vulnbench/diff.hpp"
#include "vulnbench/types.hpp"

namespace vulnbench {

enum class Side { Vulnerable, Patched };
enum class ChangedIn { Vuln, Patch, Both };

std::string side_name(Side s);
std::string changed_in_name(ChangedIn c);

struct InventoryEntry {
  std::string file;
  std::string function;  // qualified name as written in the source
  ChangedIn changed_in = ChangedIn::Both;
};

struct PreambleSnippet {
  std::string file;
  Side side = Side::Vulnerable;
  std::string text;  // contiguous changed lines outside every function
};

// The assembled vulnerable/patched texts for one fix commit: every changed
// function in full, out-of-function changes at the top, `// File:` headers.
struct CodeBlockPair {
  std::string record_id;
  std::string vulnerable_text;
  std::string patched_text;
  std::size_t files_changed = 0;
  std::size_t functions_changed = 0;
  std::size_t lines_added = 0;
  std::size_t lines_deleted = 0;
  Granularity granularity = Granularity::G1;
  std::vector<InventoryEntry> function_inventory;
  std::vector<PreambleSnippet> preamble_changes;
};

// One side carries no code at all: nothing to show a model. When the other
// side holds a complete function (a patch that only adds or only removes
// one), filtering treats the record as the asymmetric-function case.
struct EmptyBlockInfo {
  Side empty_side = Side::Vulnerable;
  bool other_side_has_functions = false;
};

// Exactly one of the two members is populated.
struct AssembleResult {
  std::optional<CodeBlockPair> pair;
  std::optional<EmptyBlockInfo> empty;
};

struct MissingFileImage : Error {
  explicit MissingFileImage(const std::string& path)
      : Error("missing file image: " + path), path(path) {}
  std::string path;
};

struct Unclassifiable : Error {
  Unclassifiable() : Error("granularity unclassifiable: no files and no functions") {}
};

struct ChangeStats {
  std::size_t files_changed = 0;
  std::size_t functions_changed = 0;
  std::size_t lines_added = 0;
  std::size_t lines_deleted = 0;
};

// Builds the code block pair for one record. old_files/new_files map paths to
// full pre-/post-image contents; an absent entry is only an error when that
// side of the file actually has changed lines.
AssembleResult assemble_blocks(const VulnRecord& record, const DiffSet& diff,
                               const std::map<std::string, std::string>& old_files,
                               const std::map<std::string, std::string>& new_files);

// G1: one file, one function. G2: one file, several functions.
// G3: several files. Throws Unclassifiable on 0/0.
Granularity classify_granularity(std::size_t files_changed, std::size_t functions_changed);
Granularity classify_granularity(const CodeBlockPair& pair);

ChangeStats change_stats(const DiffSet& diff, const std::vector<InventoryEntry>& inventory);

nlohmann::json pair_to_json(const CodeBlockPair& pair);
CodeBlockPair pair_from_json(const nlohmann::json& j);

// Where pre-/post-image file contents come from.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::optional<std::string> old_image(const VulnRecord& record, const std::string& path) = 0;
  virtual std::optional<std::string> new_image(const VulnRecord& record, const std::string& path) = 0;
};

// Layout: <root>/<record_id>/old/<path> and <root>/<record_id>/new/<path>.
class DirectoryImageSource : public ImageSource {
 public:
  explicit DirectoryImageSource(std::filesystem::path root) : root_(std::move(root)) {}
  std::optional<std::string> old_image(const VulnRecord& record, const std::string& path) override;
  std::optional<std::string> new_image(const VulnRecord& record, const std::string& path) override;

 private:
  std::filesystem::path root_;
};

// Reads images out of local clones (<clones_root>/<project>) via
// `git show <commit>^:<path>` and `git show <commit>:<path>`.
class GitImageSource : public ImageSource {
 public:
  explicit GitImageSource(std::filesystem::path clones_root) : root_(std::move(clones_root)) {}
  std::optional<std::string> old_image(const VulnRecord& record, const std::string& path) override;
  std::optional<std::string> new_image(const VulnRecord& record, const std::string& path) override;

 private:
  std::optional<std::string> show(const VulnRecord& record, const std::string& rev_and_path);
  std::filesystem::path root_;
};

// Fetches the images a diff needs from the source and assembles the pair.
// Throws MissingFileImage when a needed image cannot be produced.
AssembleResult extract_record(const VulnRecord& record, const DiffSet& diff, ImageSource& source);

}  // namespace vulnbench
