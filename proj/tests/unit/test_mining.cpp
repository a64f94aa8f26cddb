#include "defectlab/errors.hpp"
#include "defectlab/fixtures.hpp"
#include "defectlab/git.hpp"
#include "defectlab/labeling.hpp"
#include "defectlab/mining.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace defectlab;
using defectlab::testing::TempDir;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Commit commit_at(const std::string& hash, std::int64_t t) {
  Commit c;
  c.hash = hash;
  c.author = "a@example.org";
  c.timestamp = t;
  return c;
}

}  // namespace

TEST(Mining, SmallFixtureDumpHasThreeRecords) {
  TempDir dir("mine-small");
  const auto hashes = build_small_fixture(dir / "repo");
  dump_history(dir / "repo", dir / "dump.jsonl");
  const auto h = load_dump(dir / "dump.jsonl");
  ASSERT_EQ(h.commits.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(h.commits[i].hash, hashes[i]);

  const auto& c1 = h.commits[0];
  ASSERT_EQ(c1.changes.size(), 2u);
  for (const auto& ch : c1.changes) {
    EXPECT_EQ(ch.kind, ChangeKind::add);
    if (ch.path == "img.bin") EXPECT_TRUE(ch.binary);
    if (ch.path == "src/A.java") EXPECT_EQ(ch.lines_added, 3);
  }
  EXPECT_EQ(c1.author, "ann@example.org");

  const auto& c2 = h.commits[1];
  for (const auto& ch : c2.changes)
    if (ch.path == "src/A.java") {
      EXPECT_EQ(ch.lines_added, 1);
      EXPECT_EQ(ch.lines_deleted, 1);
    }

  const auto& c3 = h.commits[2];
  bool saw_rename = false, saw_delete = false;
  for (const auto& ch : c3.changes) {
    if (ch.kind == ChangeKind::rename) {
      saw_rename = true;
      EXPECT_EQ(ch.old_path, "src/B.java");
      EXPECT_EQ(ch.path, "src/util/B.java");
      EXPECT_EQ(ch.canonical_id, "src/B.java");
    }
    if (ch.kind == ChangeKind::remove) {
      saw_delete = true;
      EXPECT_EQ(ch.path, "img.bin");
    }
  }
  EXPECT_TRUE(saw_rename);
  EXPECT_TRUE(saw_delete);
}

TEST(Mining, DumpIsByteIdenticalAcrossRuns) {
  TempDir dir("mine-det");
  build_small_fixture(dir / "repo");
  dump_history(dir / "repo", dir / "a.jsonl");
  dump_history(dir / "repo", dir / "b.jsonl");
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
}

TEST(Mining, EmptyRepositoryGivesEmptyDump) {
  TempDir dir("mine-empty");
  FixtureRepo repo(dir / "repo");
  dump_history(repo.path(), dir / "dump.jsonl");
  EXPECT_EQ(slurp(dir / "dump.jsonl"), "");
  EXPECT_TRUE(load_dump(dir / "dump.jsonl").commits.empty());
}

TEST(Mining, MergeCommitIsDumpedWithTwoParents) {
  TempDir dir("mine-merge");
  const auto hashes = build_merge_fixture(dir / "repo");
  dump_history(dir / "repo", dir / "dump.jsonl");
  const auto h = load_dump(dir / "dump.jsonl");
  ASSERT_EQ(h.commits.size(), 4u);
  const auto* merge = h.find(hashes[3]);
  ASSERT_NE(merge, nullptr);
  EXPECT_TRUE(merge->is_merge());
  EXPECT_EQ(merge->parents.size(), 2u);
  int merges = 0;
  for (const auto& c : h.commits) merges += c.is_merge();
  EXPECT_EQ(merges, 1);
}

TEST(Mining, ParseDumpSortsByTimestamp) {
  std::istringstream in(
      R"({"hash":"bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb","parents":["aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa"],"author":"x@y","timestamp":20,"message":"two","changes":[]})"
      "\n"
      R"({"hash":"aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa","parents":[],"author":"x@y","timestamp":10,"message":"one","changes":[]})"
      "\n");
  const auto h = parse_dump(in);
  ASSERT_EQ(h.commits.size(), 2u);
  EXPECT_EQ(h.commits[0].hash, std::string(40, 'a'));
  EXPECT_EQ(h.commits[1].hash, std::string(40, 'b'));
}

TEST(Mining, ParseDumpMissingHashReportsLine) {
  std::istringstream in(
      R"({"hash":"aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa","parents":[],"author":"x@y","timestamp":10,"message":"one","changes":[]})"
      "\n"
      R"({"parents":[],"author":"x@y","timestamp":11,"message":"two","changes":[]})"
      "\n");
  try {
    parse_dump(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_TRUE(e.is_validation());
  }
}

TEST(Mining, RenameThenEditSharesCanonicalId) {
  std::istringstream in(
      R"({"hash":"aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa","parents":[],"author":"x@y","timestamp":1,"message":"m","changes":[{"path":"A.java","added":3,"deleted":0,"kind":"add","binary":false}]})"
      "\n"
      R"({"hash":"bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb","parents":["aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa"],"author":"x@y","timestamp":2,"message":"m","changes":[{"path":"B.java","old_path":"A.java","added":0,"deleted":0,"kind":"rename","binary":false}]})"
      "\n"
      R"({"hash":"cccccccccccccccccccccccccccccccccccccccc","parents":["bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb"],"author":"x@y","timestamp":3,"message":"m","changes":[{"path":"C.java","old_path":"B.java","added":1,"deleted":0,"kind":"rename","binary":false}]})"
      "\n"
      R"({"hash":"dddddddddddddddddddddddddddddddddddddddd","parents":["cccccccccccccccccccccccccccccccccccccccc"],"author":"x@y","timestamp":4,"message":"m","changes":[{"path":"C.java","added":1,"deleted":1,"kind":"modify","binary":false}]})"
      "\n");
  const auto h = parse_dump(in);
  std::set<std::string> ids;
  for (const auto& c : h.commits)
    for (const auto& ch : c.changes) ids.insert(ch.canonical_id);
  EXPECT_EQ(ids, std::set<std::string>{"A.java"});
}

TEST(Mining, RecreatedFileGetsFreshCanonicalId) {
  std::vector<Commit> commits;
  auto add = [&](const char* hash, std::int64_t t, ChangeKind kind) {
    Commit c = commit_at(hash, t);
    FileChange ch;
    ch.path = "X.java";
    ch.kind = kind;
    c.changes.push_back(ch);
    commits.push_back(c);
  };
  add("a", 1, ChangeKind::add);
  add("b", 2, ChangeKind::remove);
  add("c", 3, ChangeKind::add);
  assign_canonical_ids(commits);
  EXPECT_EQ(commits[0].changes[0].canonical_id, "X.java");
  EXPECT_EQ(commits[1].changes[0].canonical_id, "X.java");
  EXPECT_EQ(commits[2].changes[0].canonical_id, "X.java@2");
}

TEST(Mining, AssignReleasesRule) {
  std::vector<Release> rel = {{"v1", 10, 1}, {"v2", 20, 2}};
  std::vector<Commit> commits = {commit_at("a", 3), commit_at("b", 12), commit_at("c", 21), commit_at("d", 5),
                                 commit_at("e", 25), commit_at("f", 20)};
  const auto m = assign_releases(commits, rel);
  EXPECT_EQ(m.at("a"), 1);
  EXPECT_EQ(m.at("b"), 2);
  EXPECT_EQ(m.at("c"), 2);
  EXPECT_EQ(m.at("d"), 1);
  EXPECT_EQ(m.at("e"), 2);
  EXPECT_EQ(m.at("f"), 2);
}

TEST(Mining, ReleaseTotalityExcludesMerges) {
  std::vector<Commit> commits;
  for (int i = 0; i < 30; ++i) commits.push_back(commit_at("c" + std::to_string(i), i * 7));
  commits[5].parents = {"c3", "c4"};
  std::vector<Release> rel = {{"v1", 50, 1}, {"v2", 100, 2}, {"v3", 150, 3}};
  const auto m = assign_releases(commits, rel);
  std::map<int, int> per_release;
  for (const auto& [hash, r] : m) per_release[r]++;
  int total = 0;
  for (const auto& [r, n] : per_release) total += n;
  EXPECT_EQ(total, 29);
  EXPECT_EQ(m.count("c5"), 0u);
}

TEST(Mining, ReleasesCsvSortsAndRejectsDuplicateDates) {
  std::istringstream in("tag,date\nv2,2020-03-01T00:00:00Z\nv1,2020-01-26\n");
  const auto rel = read_releases(in);
  ASSERT_EQ(rel.size(), 2u);
  EXPECT_EQ(rel[0].tag, "v1");
  EXPECT_EQ(rel[0].index, 1);
  EXPECT_EQ(rel[1].index, 2);
  EXPECT_EQ(rel[0].date, parse_iso8601("2020-01-26T00:00:00Z"));
  std::istringstream dup("tag,date\nv1,2020-01-01\nv2,2020-01-01T00:00:00Z\n");
  EXPECT_THROW(read_releases(dup), ConfigError);
}

TEST(Mining, Iso8601Offsets) {
  EXPECT_EQ(parse_iso8601("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(parse_iso8601("1970-01-01T01:00:00+01:00"), 0);
  EXPECT_EQ(parse_iso8601("2020-01-01"), 1577836800);
  EXPECT_EQ(format_iso8601(1577836800), "2020-01-01T00:00:00Z");
  EXPECT_THROW(parse_iso8601("yesterday"), Error);
}

TEST(Mining, AuthorIdentityPrefersEmail) {
  EXPECT_EQ(normalize_author("Ann@Example.ORG", "Ann"), "ann@example.org");
  EXPECT_EQ(normalize_author("", "Ann Smith"), "ann smith");
}

TEST(Mining, ValidateThresholds) {
  ProjectHistory h;
  for (int i = 0; i < 5; ++i) h.commits.push_back(commit_at("c" + std::to_string(i), i * 86400));
  h.reindex();
  const auto r = validate_project(h);
  EXPECT_FALSE(r.passed());
  const auto f = r.failures();
  EXPECT_NE(std::find(f.begin(), f.end(), "Commits"), f.end());

  ProjectHistory h2;
  for (int i = 0; i < 30; ++i) {
    auto c = commit_at("d" + std::to_string(i), static_cast<std::int64_t>(i) * 49 * 7 * 86400 / 29);
    c.author = "dev" + std::to_string(i % 8) + "@x";
    h2.commits.push_back(c);
  }
  h2.reindex();
  const auto f2 = validate_project(h2, {}, 12).failures();
  EXPECT_EQ(f2, std::vector<std::string>{"Duration"});
}

TEST(Mining, PipelineFixturePassesGitChecks) {
  TempDir dir("mine-pipe");
  build_pipeline_fixture(dir / "repo");
  dump_history(dir / "repo", dir / "dump.jsonl");
  auto h = load_dump(dir / "dump.jsonl");
  GitRepo repo(dir / "repo");
  h.releases = releases_from_tags(repo);
  ASSERT_EQ(h.releases.size(), 6u);
  EXPECT_EQ(h.releases.front().tag, "v1");
  EXPECT_EQ(h.releases.back().tag, "v6");
  h.commit_release = assign_releases(h.commits, h.releases);

  GitBlameProvider blame(repo);
  const auto labels = label_history(h, blame, default_fix_keywords());
  const auto report = validate_project(h, {}, count_defective_commits(labels));
  EXPECT_TRUE(report.passed()) << ::testing::PrintToString(report.failures());
  EXPECT_EQ(report.unchecked(), 2);
}
