#pragma once

#include "defectlab/tokenizer.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace defectlab {

class GitRepo;
class ObjectReader;
struct ProjectHistory;

/// All Table-1 style product metric names, in output column order.
const std::vector<std::string>& product_metric_names();
/// The subset computed natively from source text.
const std::vector<std::string>& native_product_metric_names();

/// Metrics for one file at one commit. Absent keys are missing values.
struct ProductRow {
  std::string canonical_id;
  std::string commit_hash;
  std::map<std::string, double> values;
};

/// Per-method measurements behind the file-level aggregates.
struct MethodInfo {
  std::string name;
  int start_line = 0;
  int end_line = 0;
  bool has_body = false;
  bool is_static = false;
  enum class Visibility { public_, private_, protected_, package_ } visibility = Visibility::package_;
  int cyclomatic = 1;
  int cyclomatic_strict = 1;
  int cyclomatic_modified = 1;
  int essential = 1;
  int max_nesting = 0;
};

struct SourceStructure {
  std::vector<MethodInfo> methods;
  int instance_variables = 0;
  int class_variables = 0;
};

/// Brace-depth method and field detection (not a grammar).
SourceStructure analyze_structure(const std::vector<Token>& tokens);

/// Native subset of product metrics for one token stream.
ProductRow compute_product_row(const std::vector<Token>& tokens);

/// sanitize + tokenize + compute.
ProductRow measure_source(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// File content at a revision via the object store. Throws SnapshotError when
/// the path does not exist there.
std::string snapshot(const GitRepo& repo, const std::string& commit, const std::string& path);
std::string snapshot(ObjectReader& reader, const std::string& commit, const std::string& path);

struct ProductOptions {
  std::vector<std::string> extensions = {".java"};
};

/// One row per (tracked file, non-merge commit) where the file exists after the commit.
std::vector<ProductRow> compute_product_rows(const ProjectHistory& history, const GitRepo& repo,
                                             const ProductOptions& options = {});

/// Overlays an externally computed metric table keyed by (commit, file).
/// Unknown columns are reported in `warnings` and ignored; a duplicate key
/// throws ImportError. Imported values win; native values stay where the
/// import has no column. Import rows without a native counterpart are appended.
std::vector<ProductRow> import_product_csv(std::istream& in, std::vector<ProductRow> native,
                                           std::vector<std::string>* warnings = nullptr);
std::vector<ProductRow> import_product_csv(const std::string& path, std::vector<ProductRow> native,
                                           std::vector<std::string>* warnings = nullptr);

void write_product_csv(std::ostream& out, const std::vector<ProductRow>& rows);
std::vector<ProductRow> read_product_csv(std::istream& in);

}  // namespace defectlab
