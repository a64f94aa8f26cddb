#pragma once

#include "defectlab/mining.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace defectlab {

class GitRepo;

struct FixCommit {
  std::string hash;
  std::vector<std::string> matched_keywords;  // issue references appear as "#<n>"
  std::vector<std::string> fixed_files;       // canonical ids
};

struct InducingLabel {
  std::string inducing_hash;
  std::string canonical_id;
  std::string fix_hash;
  int line_evidence = 0;
};

/// Origin of one line of `file` as it stood at `at_commit`.
///
/// Records produced for SZZ also carry the fix whose diff removes or modifies
/// the line and whether the line holds code (false for blank/comment-only
/// lines), so that a recorded blame file can replay labeling offline.
struct BlameRecord {
  std::string file;
  std::string at_commit;
  int line_number = 0;
  std::string origin_hash;
  std::string fix;
  bool code = true;
};

/// Source of the lines a fix deletes or modifies, already blamed.
class BlameProvider {
 public:
  virtual ~BlameProvider() = default;
  /// Lines of `old_path` at `parent` removed or modified by `fix` (whose
  /// version of the file lives at `new_path`).
  virtual std::vector<BlameRecord> trace(const std::string& fix, const std::string& parent,
                                         const std::string& old_path,
                                         const std::string& new_path) = 0;
};

/// Live provider: zero-context diff, blame at the parent, tokenizer line classes.
class GitBlameProvider : public BlameProvider {
 public:
  explicit GitBlameProvider(const GitRepo& repo);
  ~GitBlameProvider() override;
  std::vector<BlameRecord> trace(const std::string& fix, const std::string& parent,
                                 const std::string& old_path, const std::string& new_path) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Offline provider over a JSON-lines file of BlameRecord.
class BlameFileProvider : public BlameProvider {
 public:
  explicit BlameFileProvider(std::istream& in);
  explicit BlameFileProvider(const std::string& path);
  std::vector<BlameRecord> trace(const std::string& fix, const std::string& parent,
                                 const std::string& old_path, const std::string& new_path) override;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<BlameRecord>> records_;
  void load(std::istream& in);
};

/// Wraps a provider and keeps every record it returns.
class RecordingBlameProvider : public BlameProvider {
 public:
  explicit RecordingBlameProvider(BlameProvider& inner) : inner_(inner) {}
  std::vector<BlameRecord> trace(const std::string& fix, const std::string& parent,
                                 const std::string& old_path, const std::string& new_path) override;
  const std::vector<BlameRecord>& records() const { return records_; }

 private:
  BlameProvider& inner_;
  std::vector<BlameRecord> records_;
};

void write_blame_records(std::ostream& out, const std::vector<BlameRecord>& records);

struct LabelingOptions {
  std::vector<std::string> extensions = {".java"};
  bool line_filter = true;  // skip blank and comment-only lines
};

bool has_tracked_extension(const std::string& path, const std::vector<std::string>& extensions);

const std::vector<std::string>& default_fix_keywords();
/// One keyword per line; '#' starts a comment.
std::vector<std::string> load_keywords(const std::string& path);

/// Whole-word, case-insensitive keyword match or an issue reference `#<digits>`.
std::vector<FixCommit> identify_fix_commits(const ProjectHistory& history,
                                            const std::vector<std::string>& keywords,
                                            const LabelingOptions& options = {});

/// SZZ for one fix. Root commits produce no labels and a warning.
std::vector<InducingLabel> szz_trace(const FixCommit& fix, const ProjectHistory& history,
                                     BlameProvider& blame, const LabelingOptions& options = {},
                                     std::vector<std::string>* warnings = nullptr);

/// identify_fix_commits + szz_trace over the whole history.
std::vector<InducingLabel> label_history(const ProjectHistory& history, BlameProvider& blame,
                                         const std::vector<std::string>& keywords,
                                         const LabelingOptions& options = {},
                                         std::vector<std::string>* warnings = nullptr);

enum class LabelLevel { jit, release };

/// (canonical_id, period) -> defective. The period is the commit hash at jit
/// level and the release index (decimal) at release level. Rows exist for
/// every tracked file touched in the period.
std::map<std::pair<std::string, std::string>, bool> label_rows(
    const std::vector<InducingLabel>& labels, const ProjectHistory& history, LabelLevel level,
    const LabelingOptions& options = {});

/// Number of distinct commits that induced at least one label.
int count_defective_commits(const std::vector<InducingLabel>& labels);

void write_labels_csv(std::ostream& out, const std::vector<InducingLabel>& labels);
std::vector<InducingLabel> read_labels_csv(std::istream& in);
std::vector<InducingLabel> load_labels_csv(const std::string& path);

}  // namespace defectlab
