#pragma once

#include "defectlab/subprocess.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace defectlab {

/// Thin adapter over the git command line. The binary defaults to `git` on
/// PATH and can be overridden with the DEFECTLAB_GIT environment variable.
class GitRepo {
 public:
  explicit GitRepo(std::string path);

  static std::string binary();

  const std::string& path() const noexcept { return path_; }

  /// Runs `git -C <path> args...`; throws MiningError with git's stderr on failure.
  std::string run(const std::vector<std::string>& args) const;
  ProcessResult try_run(const std::vector<std::string>& args) const;

  bool has_commits() const;

 private:
  std::string path_;
};

/// Streams blobs out of the object store through one `git cat-file --batch`
/// child. Not thread-safe; create one per worker.
class ObjectReader {
 public:
  explicit ObjectReader(const GitRepo& repo);
  ~ObjectReader();
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  /// Content of `path` at `rev`, or nullopt when the path does not exist there.
  std::optional<std::string> read(std::string_view rev, std::string_view path);

 private:
  std::unique_ptr<PipedProcess> child_;
};

/// One hunk of a zero-context unified diff: old lines [old_start, old_start+old_count).
struct DiffHunk {
  int old_start = 0;
  int old_count = 0;
  int new_start = 0;
  int new_count = 0;
};

/// Parses `@@ -a,b +c,d @@` headers out of unified diff text.
std::vector<DiffHunk> parse_hunks(std::string_view diff);

/// Origin commit per requested line, parsed from `git blame --porcelain`.
struct BlameLine {
  int line = 0;
  std::string origin;
};
std::vector<BlameLine> parse_porcelain_blame(std::string_view porcelain);

}  // namespace defectlab
