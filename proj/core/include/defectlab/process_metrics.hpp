#pragma once

#include "defectlab/labeling.hpp"
#include "defectlab/mining.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace defectlab {

/// The 21 process metric names in output order.
const std::vector<std::string>& process_metric_names();

struct ProcessRow {
  std::string canonical_id;
  std::string commit_hash;
  int release_index = 1;
  double la = 0, ld = 0, lt = 0, age = 0;
  double adev = 0, ddev = 0, nuc = 0, own = 0, minor = 0;
  double nddev = 0, ncomm = 0, nadev = 0, avg_nddev = 0, avg_nadev = 0, avg_ncomm = 0;
  double ns = 0, nd = 0, exp = 0, rexp = 0, sexp = 0, sctr = 0;
  bool defective = false;
  bool binary = false;

  /// Metric values in process_metric_names() order.
  std::vector<double> values() const;
};

struct Neighborhood {
  std::vector<std::string> neighbors;
  double nddev = 0, ncomm = 0, nadev = 0;
  double avg_nddev = 0, avg_nadev = 0, avg_ncomm = 0;
};

struct Experience {
  double exp = 0, rexp = 0, sexp = 0;
};

/// First path component ("" for files at the root).
std::string subsystem_of(const std::string& path);
/// Parent directory ("" for files at the root).
std::string directory_of(const std::string& path);

/// Incremental single-pass state. Feed commits in history order; every row
/// is computed from the state before its commit.
class ProcessMiner {
 public:
  explicit ProcessMiner(LabelingOptions options = {});

  /// Rows for one non-merge commit, then folds the commit into the state.
  /// Merge commits return no rows and leave the state untouched.
  std::vector<ProcessRow> process(const Commit& commit, int release);

  Neighborhood neighborhood(const std::string& canonical_id, int release) const;
  Experience experience(const std::string& author, const std::string& subsystem,
                        std::int64_t now) const;

 private:
  struct FileState {
    std::int64_t last_change = 0;
    double size = 0;
    std::map<std::string, double> added_by;
    std::set<std::string> authors;
    std::vector<std::size_t> commits;  // indices into commits_
    std::set<std::string> neighbors;
  };
  struct CommitInfo {
    std::string author;
    int release = 1;
  };
  struct AuthorState {
    std::vector<std::int64_t> times;
    std::map<std::string, int> subsystem_commits;
  };

  LabelingOptions options_;
  std::unordered_map<std::string, FileState> files_;
  std::unordered_map<std::string, AuthorState> authors_;
  std::map<std::pair<int, std::string>, std::set<std::string>> release_authors_;
  std::vector<CommitInfo> commits_;
  mutable std::vector<std::size_t> mark_;
  mutable std::size_t stamp_ = 0;

  double active_devs(const std::string& canonical_id, int release) const;
};

/// One row per (tracked file, non-merge commit touching it); `defective`
/// comes from the just-in-time labels.
std::vector<ProcessRow> compute_process_rows(const ProjectHistory& history,
                                             const std::vector<InducingLabel>& labels,
                                             const LabelingOptions& options = {});

void write_process_csv(std::ostream& out, const std::vector<ProcessRow>& rows);
std::vector<ProcessRow> read_process_csv(std::istream& in);

}  // namespace defectlab
