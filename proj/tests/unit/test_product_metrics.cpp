#include "defectlab/errors.hpp"
#include "defectlab/fixtures.hpp"
#include "defectlab/git.hpp"
#include "defectlab/mining.hpp"
#include "defectlab/product_metrics.hpp"
#include "defectlab/tokenizer.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace defectlab;
using defectlab::testing::TempDir;

namespace {

double value(const ProductRow& row, const std::string& name) {
  auto it = row.values.find(name);
  EXPECT_NE(it, row.values.end()) << name;
  return it == row.values.end() ? -1.0 : it->second;
}

std::string rebuild(std::string_view text, const std::vector<Token>& tokens) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& t : tokens) {
    // Gaps may only hold skipped whitespace.
    for (std::size_t i = pos; i < t.offset; ++i) {
      EXPECT_TRUE(text[i] == ' ' || text[i] == '\t' || text[i] == '\r' || text[i] == '\f')
          << "byte " << i;
      out.push_back(text[i]);
    }
    out += t.text;
    pos = t.offset + t.text.size();
  }
  out.append(text.substr(pos));
  return out;
}

const char* kCalc = R"(package org.demo;

/**
 * Calculator.
 */
public class Calc {
  private int total;
  static int instances = 0;

  public int add(int a, int b) {
    if (a > 0 && b > 0) {
      return a + b;
    }
    return 0;
  }

  protected void loop(int n) {
    for (int i = 0; i < n; i++) {
      while (total < i) { total++; }
    }
  }

  private static String label(int k) {
    switch (k) {
      case 1: return "one";
      case 2: return "two";
      default: return "many";
    }
  }
}
)";

}  // namespace

TEST(Tokenizer, CodeWithTrailingComment) {
  const auto tokens = tokenize("int a; // x");
  const auto lines = classify_lines(tokens);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_TRUE(lines[0].code);
  EXPECT_TRUE(lines[0].comment);
  const auto row = measure_source("int a; // x");
  EXPECT_EQ(value(row, "CountLineCode"), 1);
  EXPECT_EQ(value(row, "CountLineComment"), 1);
  EXPECT_EQ(value(row, "CountSemicolon"), 1);
}

TEST(Tokenizer, BlockCommentSpansLines) {
  const auto row = measure_source("/* a\nb */");
  EXPECT_EQ(value(row, "CountLine"), 2);
  EXPECT_EQ(value(row, "CountLineComment"), 2);
  EXPECT_EQ(value(row, "CountLineCode"), 0);
}

TEST(Tokenizer, KindsAndLines) {
  const auto tokens = tokenize("x = \"a;b\"; // c\n'{' + 0x1F;\n");
  std::vector<TokenKind> kinds;
  for (const auto& t : tokens) kinds.push_back(t.kind);
  const std::vector<TokenKind> expected = {
      TokenKind::identifier, TokenKind::punct,     TokenKind::string,    TokenKind::semicolon,
      TokenKind::line_comment, TokenKind::newline, TokenKind::character, TokenKind::punct,
      TokenKind::number,     TokenKind::semicolon, TokenKind::newline};
  EXPECT_EQ(kinds, expected);
  EXPECT_EQ(tokens[6].line, 2);
  EXPECT_EQ(count_lines(tokens), 2);
}

TEST(Tokenizer, UnterminatedCommentWarns) {
  std::vector<std::string> warnings;
  const auto tokens = tokenize("int a;\n/* open\nstill", &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(tokens.back().kind, TokenKind::block_comment);
  EXPECT_EQ(count_lines(tokens), 3);
}

TEST(Tokenizer, RoundTripsSource) {
  const auto tokens = tokenize(kCalc);
  EXPECT_EQ(rebuild(kCalc, tokens), kCalc);
}

TEST(Tokenizer, RoundTripsRandomBytes) {
  std::mt19937 gen(11);
  const std::string alphabet = "ab1 \t\n;{}()/*\"'\\.+-=<>&|!?:x_";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int n = std::uniform_int_distribution<int>(0, 60)(gen);
    for (int i = 0; i < n; ++i)
      text.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(gen)]);
    const auto tokens = tokenize(text);
    ASSERT_EQ(rebuild(text, tokens), text) << text;
    const auto lines = classify_lines(tokens);
    EXPECT_EQ(static_cast<int>(lines.size()), count_lines(tokens));
  }
}

TEST(Tokenizer, SanitizesInvalidUtf8) {
  const std::string bad = std::string("a") + char(0xff) + "b";
  EXPECT_EQ(sanitize_utf8(bad), "a\xEF\xBF\xBD" "b");
  EXPECT_EQ(sanitize_utf8("\xC3\xA9"), "\xC3\xA9");
}

TEST(ProductMetrics, ShortCircuitRaisesStrictOnly) {
  const auto row = measure_source(
      "class C {\n  int f(int a, int b) {\n    if (a > 0 && b > 0) { return 1; }\n"
      "    return 0;\n  }\n}\n");
  EXPECT_EQ(value(row, "MaxCyclomatic"), 2);
  EXPECT_EQ(value(row, "MaxCyclomaticStrict"), 3);
  EXPECT_EQ(value(row, "CountDeclMethod"), 1);
}

TEST(ProductMetrics, SwitchCountsOnceWhenModified) {
  const auto s = analyze_structure(tokenize(kCalc));
  ASSERT_EQ(s.methods.size(), 3u);
  const auto& label = s.methods[2];
  EXPECT_EQ(label.name, "label");
  EXPECT_EQ(label.cyclomatic, 3);
  EXPECT_EQ(label.cyclomatic_modified, 2);
  EXPECT_TRUE(label.is_static);
  EXPECT_EQ(label.visibility, MethodInfo::Visibility::private_);
  EXPECT_EQ(s.methods[1].max_nesting, 2);
  EXPECT_EQ(s.instance_variables, 1);
  EXPECT_EQ(s.class_variables, 1);
}

TEST(ProductMetrics, FileAggregates) {
  const auto row = measure_source(kCalc);
  EXPECT_EQ(value(row, "CountDeclMethod"), 3);
  EXPECT_EQ(value(row, "CountDeclMethodPublic"), 1);
  EXPECT_EQ(value(row, "CountDeclMethodPrivate"), 1);
  EXPECT_EQ(value(row, "CountDeclMethodProtected"), 1);
  EXPECT_EQ(value(row, "CountDeclClassMethod"), 1);
  EXPECT_EQ(value(row, "CountDeclInstanceMethod"), 2);
  EXPECT_EQ(value(row, "SumCyclomatic"), 2 + 3 + 3);
  EXPECT_EQ(value(row, "MaxCyclomatic"), 3);
  EXPECT_EQ(value(row, "CountLineComment"), 3);
  EXPECT_EQ(value(row, "CountLine"), value(row, "CountLineCode") + value(row, "CountLineComment") +
                                         value(row, "CountLineBlank"));
}

TEST(ProductMetrics, NativeSubsetOnly) {
  const auto row = measure_source(kCalc);
  const auto& native = native_product_metric_names();
  for (const auto& [name, v] : row.values)
    EXPECT_NE(std::find(native.begin(), native.end(), name), native.end()) << name;
  EXPECT_EQ(row.values.count("PercentLackOfCohesion"), 0u);
  EXPECT_EQ(product_metric_names().size(), 45u);
}

TEST(ProductMetrics, EmptyFile) {
  const auto row = measure_source("");
  EXPECT_EQ(value(row, "CountLine"), 0);
  EXPECT_EQ(value(row, "CountLineCode"), 0);
  EXPECT_EQ(value(row, "CountDeclMethod"), 0);
  for (const auto& [name, v] : row.values) EXPECT_TRUE(std::isfinite(v)) << name;
}

TEST(ProductMetrics, ImportOverlaysColumns) {
  std::vector<ProductRow> native = {measure_source("int a;")};
  native[0].commit_hash = "c1";
  native[0].canonical_id = "A.java";
  const double code = native[0].values.at("CountLineCode");
  std::istringstream in("commit,file,PercentLackOfCohesion,Bogus\nc1,A.java,42,7\nc2,B.java,10,1\n");
  std::vector<std::string> warnings;
  const auto rows = import_product_csv(in, native, &warnings);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].values.at("PercentLackOfCohesion"), 42);
  EXPECT_EQ(rows[0].values.at("CountLineCode"), code);
  EXPECT_EQ(rows[1].canonical_id, "B.java");
  EXPECT_EQ(rows[1].values.size(), 1u);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ProductMetrics, ImportAcceptsPercentSignHeader) {
  std::istringstream in("commit,file,%LackOfCohesion\nc1,A.java,12\n");
  const auto rows = import_product_csv(in, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].values.at("PercentLackOfCohesion"), 12);
}

TEST(ProductMetrics, ImportDuplicateKeyFails) {
  std::istringstream in("commit,file,PercentLackOfCohesion\nc1,A.java,1\nc1,A.java,2\n");
  EXPECT_THROW(import_product_csv(in, {}), ImportError);
}

TEST(ProductMetrics, CsvRoundTrip) {
  auto a = measure_source(kCalc);
  a.commit_hash = "abc";
  a.canonical_id = "src/Calc.java";
  auto b = measure_source("int x;\n");
  b.commit_hash = "def";
  b.canonical_id = "src/X.java";
  b.values["PercentLackOfCohesion"] = 33.5;
  std::stringstream buf;
  write_product_csv(buf, {a, b});
  const auto back = read_product_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].canonical_id, a.canonical_id);
  EXPECT_EQ(back[0].commit_hash, a.commit_hash);
  EXPECT_EQ(back[0].values, a.values);
  EXPECT_EQ(back[1].values, b.values);
}

TEST(ProductMetrics, SnapshotAndRows) {
  TempDir dir("product");
  const auto hashes = build_small_fixture(dir / "repo");
  GitRepo repo(dir / "repo");
  const auto a = snapshot(repo, hashes[0], "src/A.java");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
  EXPECT_THROW(snapshot(repo, hashes[0], "src/B.java"), SnapshotError);
  EXPECT_THROW(snapshot(repo, hashes[2], "src/B.java"), SnapshotError);
  EXPECT_NO_THROW(snapshot(repo, hashes[2], "src/util/B.java"));

  ProjectHistory history;
  history.commits = read_git_history(repo);
  assign_canonical_ids(history.commits);
  history.reindex();
  const auto rows = compute_product_rows(history, repo);
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows) keys.insert({r.commit_hash, r.canonical_id});
  EXPECT_EQ(rows.size(), 4u);
  EXPECT_EQ(keys.size(), 4u);
  EXPECT_TRUE(keys.count({hashes[2], "src/B.java"}));
  for (const auto& r : rows) EXPECT_EQ(r.canonical_id.find("img.bin"), std::string::npos);
}
