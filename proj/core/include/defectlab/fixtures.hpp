#pragma once

#include "defectlab/synthetic.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace defectlab {

/// Scripted repository writer. Author and committer identity and dates are
/// pinned, and user/system git config is ignored, so the same script yields
/// the same commit hashes everywhere.
class FixtureRepo {
 public:
  /// Initializes an empty repository at `path`; throws if `path` exists and is non-empty.
  explicit FixtureRepo(std::string path);

  const std::string& path() const noexcept { return path_; }

  void write(const std::string& file, const std::string& content);
  void remove(const std::string& file);
  void rename(const std::string& from, const std::string& to);
  std::string commit(const std::string& name, const std::string& email, std::int64_t time,
                     const std::string& message);
  void tag(const std::string& name);
  void checkout(const std::string& branch, bool create = false);
  std::string merge(const std::string& branch, const std::string& name, const std::string& email,
                    std::int64_t time, const std::string& message);

 private:
  std::string path_;
  std::string git(const std::vector<std::string>& args,
                  const std::vector<std::pair<std::string, std::string>>& env = {}) const;
};

/// 12 commits; commit c5 plants a defect in src/app/Calc.java that c11 fixes.
/// c11 also deletes a comment line written in c3.
struct SzzFixture {
  std::string path;
  std::vector<std::string> commits;  // c1..c12
  std::string file = "src/app/Calc.java";
  std::string inducing, fix, comment_origin;
};
SzzFixture build_szz_fixture(const std::string& path);

/// 6 commits by three authors over 50 days touching a/X.java, a/Y.java and
/// b/Z.java, with a release boundary between c3 and c4.
struct ProcessFixture {
  std::string path;
  std::string releases_csv;
  std::vector<std::string> commits;  // c1..c6
  std::int64_t t0 = 0;
};
ProcessFixture build_process_fixture(const std::string& path, const std::string& releases_csv);

/// 3 commits: add (with a binary file), modify, rename plus delete.
std::vector<std::string> build_small_fixture(const std::string& path);

/// main: c1, c3; branch `feature`: c2; then a merge commit.
std::vector<std::string> build_merge_fixture(const std::string& path);

/// About 60 commits by 8 developers over 14 months across three packages,
/// with keyword-marked fixes, a rename, a delete and release tags v1..v6.
std::string build_pipeline_fixture(const std::string& path, std::uint64_t seed = 7);

/// Writes synthNN.csv per project plus `corpus.conf` into `dir`.
std::vector<std::string> write_corpus(const std::string& dir, const CorpusConfig& config);

/// Corpus variant with frozen product features and churning process features.
CorpusConfig stagnant_corpus_config();

/// Everything under `out_dir`: szz/, process/, small/, merge/, pipeline/
/// repositories and corpus/.
std::map<std::string, std::string> write_fixtures(const std::string& out_dir);

}  // namespace defectlab
