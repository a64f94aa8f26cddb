#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace defectlab {

class GitRepo;

enum class ChangeKind { add, modify, remove, rename };

const char* to_string(ChangeKind kind);
ChangeKind change_kind_from_string(const std::string& s);

struct FileChange {
  std::string path;
  std::string old_path;      // set for renames only
  std::string canonical_id;  // rename-stable identity; assigned by parse_dump
  long long lines_added = 0;
  long long lines_deleted = 0;
  ChangeKind kind = ChangeKind::modify;
  bool binary = false;
};

struct Commit {
  std::string hash;
  std::vector<std::string> parents;
  std::string author;
  std::int64_t timestamp = 0;
  std::string message;
  std::vector<FileChange> changes;

  bool is_merge() const noexcept { return parents.size() > 1; }
};

struct Release {
  std::string tag;
  std::int64_t date = 0;
  int index = 0;  // 1-based
};

struct ProjectHistory {
  std::vector<Commit> commits;  // ascending time, parents before children
  std::vector<Release> releases;
  std::unordered_map<std::string, int> commit_release;

  /// Position of a commit in `commits`, or nullopt.
  std::optional<std::size_t> position(const std::string& hash) const;
  const Commit* find(const std::string& hash) const;
  /// Release index of a commit; 1 when releases were never assigned.
  int release_of(const std::string& hash) const;
  /// Rebuilds the hash index; call after mutating `commits`.
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Lowercased email when present, else lowercased name.
std::string normalize_author(const std::string& email, const std::string& name);

/// Reads the full first-parent-agnostic history reachable from HEAD.
/// Rename detection uses git's similarity heuristic; copies are not detected.
std::vector<Commit> read_git_history(const GitRepo& repo);

/// Writes one JSON object per commit, sorted by the history ordering rule.
void write_dump(std::ostream& out, std::vector<Commit> commits);

/// Mines `repo_path` into a dump file. An empty repository yields an empty file.
void dump_history(const std::string& repo_path, const std::string& out_path);

/// Parses a dump, sorts commits and assigns canonical file ids.
ProjectHistory parse_dump(std::istream& in);
ProjectHistory load_dump(const std::string& path);

/// Ascending timestamp; ties broken parent-before-child, then by hash.
void sort_commits(std::vector<Commit>& commits);

/// Gives every FileChange a rename-stable id. A file re-created after a
/// delete gets a fresh id ("path@2", "path@3", ...).
void assign_canonical_ids(std::vector<Commit>& commits);

/// Seconds since the epoch for "YYYY-MM-DD[THH:MM[:SS]][Z|+HH:MM|-HH:MM]".
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t seconds);

/// Reads a `tag,date` CSV; sorts by date and numbers releases from 1.
/// Throws ConfigError when two releases share a date.
std::vector<Release> read_releases(std::istream& in);
std::vector<Release> load_releases(const std::string& path);
void write_releases(std::ostream& out, const std::vector<Release>& releases);

/// Releases derived from the repository's tags (tag creation date order).
std::vector<Release> releases_from_tags(const GitRepo& repo);

/// Maps every non-merge commit to the earliest release dated at or after it.
/// Commits after the final release fold into the final release.
std::unordered_map<std::string, int> assign_releases(const std::vector<Commit>& commits,
                                                     const std::vector<Release>& releases);

struct ValidationThresholds {
  int min_commits_exclusive = 20;
  double min_duration_weeks = 50.0;
  int min_contributors = 8;
  int min_defective_commits = 10;
  int min_pull_requests = 1;
  int min_issues_exclusive = 8;
};

struct ProjectMetadata {
  long long pull_requests = 0;
  long long issues = 0;
};
ProjectMetadata load_project_metadata(const std::string& path);

enum class CheckStatus { pass, fail, unchecked };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::unchecked;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  std::vector<std::string> failures() const;
  int unchecked() const;
};

/// Repository sanity checks. Pass `defective_commits` once labeling is done;
/// pull-request and issue checks need the optional metadata.
ValidationReport validate_project(const ProjectHistory& history,
                                  const ValidationThresholds& thresholds = {},
                                  std::optional<int> defective_commits = std::nullopt,
                                  std::optional<ProjectMetadata> metadata = std::nullopt);

}  // namespace defectlab
