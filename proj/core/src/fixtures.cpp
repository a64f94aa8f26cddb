#include "defectlab/fixtures.hpp"

#include "defectlab/errors.hpp"
#include "defectlab/git.hpp"
#include "defectlab/random.hpp"
#include "defectlab/subprocess.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>

namespace defectlab {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kDay = 86400;

std::vector<std::pair<std::string, std::string>> clean_env() {
  return {{"GIT_CONFIG_NOSYSTEM", "1"}, {"GIT_CONFIG_GLOBAL", "/dev/null"}, {"GIT_TERMINAL_PROMPT", "0"}};
}

std::string lines(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& l : v) s += l + "\n";
  return s;
}

std::vector<std::string> numbered(const std::string& stem, int from, int to) {
  std::vector<std::string> v;
  for (int i = from; i <= to; ++i) v.push_back(fmt::format("int {}{} = {};", stem, i, i));
  return v;
}

}  // namespace

FixtureRepo::FixtureRepo(std::string path) : path_(std::move(path)) {
  if (fs::exists(path_) && !fs::is_empty(path_)) throw ConfigError("fixture target " + path_ + " is not empty");
  fs::create_directories(path_);
  path_ = fs::absolute(path_).lexically_normal().string();
  git({"init", "-q", "-b", "main"});
}

std::string FixtureRepo::git(const std::vector<std::string>& args,
                             const std::vector<std::pair<std::string, std::string>>& env) const {
  std::vector<std::string> argv = {GitRepo::binary(), "-c", "commit.gpgsign=false", "-c", "core.autocrlf=false"};
  argv.insert(argv.end(), args.begin(), args.end());
  auto e = clean_env();
  e.insert(e.end(), env.begin(), env.end());
  auto r = run_process(argv, path_, e);
  if (r.exit_code != 0) throw MiningError("fixture git " + args.front() + " failed", r.err);
  return r.out;
}

void FixtureRepo::write(const std::string& file, const std::string& content) {
  const auto p = fs::path(path_) / file;
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write fixture file " + p.string());
}

void FixtureRepo::remove(const std::string& file) { git({"rm", "-q", file}); }

void FixtureRepo::rename(const std::string& from, const std::string& to) {
  fs::create_directories((fs::path(path_) / to).parent_path());
  git({"mv", from, to});
}

std::string FixtureRepo::commit(const std::string& name, const std::string& email, std::int64_t time,
                                const std::string& message) {
  git({"add", "-A"});
  const std::string date = fmt::format("@{} +0000", time);
  git({"commit", "-q", "--allow-empty", "-m", message},
      {{"GIT_AUTHOR_NAME", name}, {"GIT_AUTHOR_EMAIL", email}, {"GIT_AUTHOR_DATE", date},
       {"GIT_COMMITTER_NAME", name}, {"GIT_COMMITTER_EMAIL", email}, {"GIT_COMMITTER_DATE", date}});
  auto hash = git({"rev-parse", "HEAD"});
  while (!hash.empty() && (hash.back() == '\n' || hash.back() == '\r')) hash.pop_back();
  return hash;
}

void FixtureRepo::tag(const std::string& name) { git({"tag", name}); }

void FixtureRepo::checkout(const std::string& branch, bool create) {
  if (create) git({"checkout", "-q", "-b", branch});
  else git({"checkout", "-q", branch});
}

std::string FixtureRepo::merge(const std::string& branch, const std::string& name, const std::string& email,
                               std::int64_t time, const std::string& message) {
  const std::string date = fmt::format("@{} +0000", time);
  git({"merge", "-q", "--no-ff", "-m", message, branch},
      {{"GIT_AUTHOR_NAME", name}, {"GIT_AUTHOR_EMAIL", email}, {"GIT_AUTHOR_DATE", date},
       {"GIT_COMMITTER_NAME", name}, {"GIT_COMMITTER_EMAIL", email}, {"GIT_COMMITTER_DATE", date}});
  auto hash = git({"rev-parse", "HEAD"});
  while (!hash.empty() && hash.back() == '\n') hash.pop_back();
  return hash;
}

SzzFixture build_szz_fixture(const std::string& path) {
  FixtureRepo repo(path);
  SzzFixture fx;
  fx.path = repo.path();
  const std::int64_t t0 = 1577836800;  // 2020-01-01
  auto at = [&](int day) { return t0 + day * kDay; };
  struct Dev {
    const char* name;
    const char* email;
  };
  const Dev alice{"Alice", "alice@example.org"}, bob{"Bob", "bob@example.org"},
      carol{"Carol", "carol@example.org"}, dave{"Dave", "dave@example.org"};
  auto commit = [&](const Dev& d, int day, const char* msg) {
    fx.commits.push_back(repo.commit(d.name, d.email, at(day), msg));
  };

  const std::vector<std::string> main_v1 = {
      "package app;", "", "public class Main {", "    public static void main(String[] args) {",
      "        System.out.println(\"start\");", "    }", "}"};
  repo.write("README.md", "Calculator demo\n");
  repo.write("src/app/Main.java", lines(main_v1));
  commit(alice, 0, "Initial import");

  const std::vector<std::string> util_v1 = {"package app;", "", "public class Util {",
                                            "    static String pad(String s) {", "        return \" \" + s;",
                                            "    }", "}"};
  repo.write("src/app/Util.java", lines(util_v1));
  commit(bob, 1, "Add utility helpers");

  std::vector<std::string> calc = {"package app;",
                                   "",
                                   "public class Calc {",
                                   "    // computes totals",
                                   "    int add(int a, int b) {",
                                   "        return a + b;",
                                   "    }",
                                   "}"};
  repo.write("src/app/Calc.java", lines(calc));
  commit(carol, 2, "Add calculator");
  fx.comment_origin = fx.commits.back();

  auto main_v2 = main_v1;
  main_v2.insert(main_v2.begin() + 6, {"    static int twice(int v) {", "        return v * 2;", "    }"});
  repo.write("src/app/Main.java", lines(main_v2));
  commit(alice, 3, "Extend main");

  calc.insert(calc.begin() + 7, {"    int divide(int a, int b) {", "        return a / b;", "    }"});
  repo.write("src/app/Calc.java", lines(calc));
  commit(bob, 4, "Add divide operation");
  fx.inducing = fx.commits.back();

  auto util_v2 = util_v1;
  util_v2[4] = "        return \"  \" + s;";
  repo.write("src/app/Util.java", lines(util_v2));
  commit(carol, 5, "Refine util formatting");

  auto main_v3 = main_v2;
  main_v3[4] = "        System.out.println(\"starting\");";
  repo.write("src/app/Main.java", lines(main_v3));
  commit(dave, 6, "Tweak main output");

  repo.write("docs/notes.txt", "Design notes\n");
  commit(alice, 7, "Add notes");

  auto util_v3 = util_v2;
  util_v3[3] = "    static String padded(String s) {";
  repo.write("src/app/Util.java", lines(util_v3));
  commit(bob, 8, "Improve util naming");

  calc.insert(calc.begin() + 10, {"    int multiply(int a, int b) {", "        return a * b;", "    }"});
  repo.write("src/app/Calc.java", lines(calc));
  commit(carol, 9, "Add multiply operation");

  // The fix rewrites the planted line and drops the stale comment.
  calc.erase(calc.begin() + 3);
  for (auto& l : calc)
    if (l == "        return a / b;") l = "        return b == 0 ? 0 : a / b;";
  repo.write("src/app/Calc.java", lines(calc));
  commit(dave, 10, "Fix crash when dividing by zero");
  fx.fix = fx.commits.back();

  auto main_v4 = main_v3;
  main_v4[4] = "        System.out.println(\"running\");";
  repo.write("src/app/Main.java", lines(main_v4));
  commit(alice, 11, "Update main loop");
  return fx;
}

ProcessFixture build_process_fixture(const std::string& path, const std::string& releases_csv) {
  FixtureRepo repo(path);
  ProcessFixture fx;
  fx.path = repo.path();
  fx.releases_csv = releases_csv;
  fx.t0 = 1577836800;
  auto at = [&](int day) { return fx.t0 + day * kDay; };
  auto commit = [&](const char* who, int day, const char* msg) {
    const std::string name(who);
    std::string email = name + "@example.org";
    email[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(email[0])));
    fx.commits.push_back(repo.commit(name, email, at(day), msg));
  };

  auto x = numbered("x", 1, 30);
  auto y = numbered("y", 1, 4);
  auto z = numbered("z", 1, 6);

  repo.write("a/X.java", lines(x));
  repo.write("a/Y.java", lines(y));
  commit("Alice", 0, "Create X and Y");

  // +3 -2
  x.erase(x.begin(), x.begin() + 2);
  x.insert(x.begin(), {"int x31 = 31;", "int x32 = 32;", "int x33 = 33;"});
  repo.write("a/X.java", lines(x));
  commit("Bob", 10, "Rework X head");

  // Y +2 -1, Z created with 6 lines
  y[0] = "int y5 = 5;";
  y.push_back("int y6 = 6;");
  repo.write("a/Y.java", lines(y));
  repo.write("b/Z.java", lines(z));
  commit("Alice", 20, "Create Z and touch Y");

  // X +1 -1, Z +2
  for (auto& l : x)
    if (l == "int x10 = 10;") l = "int x34 = 34;";
  z.push_back("int z7 = 7;");
  z.push_back("int z8 = 8;");
  repo.write("a/X.java", lines(x));
  repo.write("b/Z.java", lines(z));
  commit("Carol", 30, "Adjust X and extend Z");

  // Y +5 -2: y2,y3 replaced by y7..y11
  std::vector<std::string> y2;
  for (const auto& l : y) {
    if (l == "int y2 = 2;") {
      for (auto& n : numbered("y", 7, 11)) y2.push_back(n);
    } else if (l != "int y3 = 3;") {
      y2.push_back(l);
    }
  }
  y = y2;
  repo.write("a/Y.java", lines(y));
  commit("Bob", 40, "Grow Y");

  // X +2 -3, Y +1 -1, Z +1 -1
  std::vector<std::string> x2;
  for (const auto& l : x) {
    if (l == "int x20 = 20;") {
      x2.push_back("int x35 = 35;");
      x2.push_back("int x36 = 36;");
    } else if (l != "int x21 = 21;" && l != "int x22 = 22;") {
      x2.push_back(l);
    }
  }
  x = x2;
  for (auto& l : y)
    if (l == "int y4 = 4;") l = "int y12 = 12;";
  for (auto& l : z)
    if (l == "int z3 = 3;") l = "int z9 = 9;";
  repo.write("a/X.java", lines(x));
  repo.write("a/Y.java", lines(y));
  repo.write("b/Z.java", lines(z));
  commit("Alice", 50, "Touch all three");

  std::ofstream rel(releases_csv, std::ios::binary);
  if (!rel) throw Error("cannot write " + releases_csv);
  rel << "tag,date\nv1,2020-01-26T00:00:00Z\nv2,2020-03-01T00:00:00Z\n";
  return fx;
}

std::vector<std::string> build_small_fixture(const std::string& path) {
  FixtureRepo repo(path);
  const std::int64_t t0 = 1600000000;
  std::vector<std::string> out;
  repo.write("src/A.java", "class A {\n    int a = 1;\n}\n");
  repo.write("img.bin", std::string("\x89PNG\r\n\x1a\n\0\0\0\x01binary", 20));
  out.push_back(repo.commit("Ann", "Ann@Example.org", t0, "Add A and an image"));
  repo.write("src/A.java", "class A {\n    int a = 2;\n}\n");
  repo.write("src/B.java", "class B {\n    int b = 1;\n    int c = 2;\n    int d = 3;\n    int e = 4;\n}\n");
  out.push_back(repo.commit("Ben", "ben@example.org", t0 + kDay, "Change A, add B"));
  repo.rename("src/B.java", "src/util/B.java");
  repo.remove("img.bin");
  out.push_back(repo.commit("Ann", "ann@example.org", t0 + 2 * kDay, "Move B into util"));
  return out;
}

std::vector<std::string> build_merge_fixture(const std::string& path) {
  FixtureRepo repo(path);
  const std::int64_t t0 = 1600000000;
  std::vector<std::string> out;
  repo.write("A.java", "class A {}\n");
  repo.write("B.java", "class B {}\n");
  out.push_back(repo.commit("Ann", "ann@example.org", t0, "Start"));
  repo.checkout("feature", true);
  repo.write("B.java", "class B { int b; }\n");
  out.push_back(repo.commit("Ben", "ben@example.org", t0 + kDay, "Feature work on B"));
  repo.checkout("main");
  repo.write("A.java", "class A { int a; }\n");
  out.push_back(repo.commit("Ann", "ann@example.org", t0 + 2 * kDay, "Main work on A"));
  out.push_back(repo.merge("feature", "Ann", "ann@example.org", t0 + 3 * kDay, "Merge feature"));
  return out;
}

namespace {

struct JavaMethod {
  std::string name;
  std::vector<std::string> body;
};

struct JavaFile {
  std::string package;
  std::string cls;
  std::vector<JavaMethod> methods;

  std::string render() const {
    std::vector<std::string> out = {"package org.demo." + package + ";", "",
                                    "public class " + cls + " {"};
    for (const auto& m : methods) {
      out.push_back("");
      out.push_back("    // " + m.name + " entry point");
      out.push_back("    public int " + m.name + "(int a, int b) {");
      for (const auto& l : m.body) out.push_back("        " + l);
      out.push_back("    }");
    }
    out.push_back("}");
    return lines(out);
  }
};

}  // namespace

std::string build_pipeline_fixture(const std::string& path, std::uint64_t seed) {
  FixtureRepo repo(path);
  Rng rng(seed);
  const char* names[] = {"Ada", "Bo", "Cy", "Di", "Ed", "Flo", "Gus", "Hal"};
  const std::int64_t t0 = 1609459200;  // 2021-01-01
  std::int64_t now = t0;
  int serial = 0;
  auto stmt = [&] {
    ++serial;
    switch (rng.index(4)) {
      case 0: return fmt::format("int v{} = a + {};", serial, serial % 7);
      case 1: return fmt::format("if (a > {}) {{ a -= b; }}", serial % 11);
      case 2: return fmt::format("for (int i{} = 0; i{} < b; i{}++) {{ a += i{}; }}", serial, serial, serial, serial);
      default: return fmt::format("b = b * {} + a;", serial % 5 + 1);
    }
  };
  const char* packages[] = {"core", "io", "util"};
  std::vector<std::pair<std::string, JavaFile>> files;
  auto file_path = [](const JavaFile& f) { return "src/main/java/org/demo/" + f.package + "/" + f.cls + ".java"; };
  auto new_file = [&](int k) {
    JavaFile f{packages[k % 3], fmt::format("Part{}", k), {}};
    const std::size_t n = 1 + rng.index(3);
    for (std::size_t m = 0; m < n; ++m) {
      JavaMethod jm{fmt::format("op{}", m), {}};
      const std::size_t s = 2 + rng.index(4);
      for (std::size_t i = 0; i < s; ++i) jm.body.push_back(stmt());
      jm.body.push_back("return a + b;");
      f.methods.push_back(std::move(jm));
    }
    files.emplace_back(file_path(f), f);
    repo.write(files.back().first, f.render());
  };
  auto commit = [&](const std::string& msg) {
    now += kDay * static_cast<std::int64_t>(5 + rng.index(5));
    const char* who = names[rng.index(8)];
    return repo.commit(who, fmt::format("{}@demo.example", who), now, msg);
  };

  for (int k = 0; k < 4; ++k) new_file(k);
  repo.write("README.md", "Pipeline demo\n");
  commit("Initial layout");

  const char* fix_subjects[] = {"Fix overflow", "Fix wrong bound", "Fixed off by one", "Bug in loop", "Fix failure on empty input"};
  const char* work_subjects[] = {"Extend", "Refactor", "Tune", "Add logic to", "Rework"};
  int next_file = 4;
  int fixes = 0;
  for (int c = 1; c < 60; ++c) {
    std::string msg;
    const bool fix_commit = c > 6 && rng.uniform() < 0.3;
    if (c % 7 == 0 && next_file < 12) {
      new_file(next_file++);
      msg = "Add component";
    } else if (c == 33) {
      auto& [p, f] = files[1];
      const std::string old = p;
      f.cls = "Part1Renamed";
      f.package = "util";
      const auto np = file_path(f);
      repo.rename(old, np);
      p = np;
      repo.write(p, f.render());
      msg = "Move Part1 into util";
    } else if (c == 45) {
      const auto victim = files[2].first;
      repo.remove(victim);
      files.erase(files.begin() + 2);
      msg = "Drop obsolete component";
    } else {
      const std::size_t touched = 1 + (rng.uniform() < 0.35 ? 1 : 0);
      for (std::size_t t = 0; t < touched; ++t) {
        auto& [p, f] = files[rng.index(files.size())];
        auto& m = f.methods[rng.index(f.methods.size())];
        const std::size_t at = rng.index(m.body.size() - 1);
        if (fix_commit) {
          m.body[at] = stmt();
          if (at + 1 < m.body.size() - 1 && rng.uniform() < 0.5) m.body[at + 1] = stmt();
        } else if (rng.uniform() < 0.2) {
          f.methods.push_back({fmt::format("op{}", f.methods.size()), {stmt(), stmt(), "return a - b;"}});
        } else {
          m.body.insert(m.body.begin() + static_cast<std::ptrdiff_t>(at), stmt());
          if (rng.uniform() < 0.5) m.body[at + 1] = stmt();
        }
        repo.write(p, f.render());
      }
      if (fix_commit) {
        msg = fmt::format("{} in {}", fix_subjects[fixes % 5], fs::path(files.front().first).stem().string());
        ++fixes;
      } else {
        msg = fmt::format("{} {}", work_subjects[rng.index(5)], "module");
      }
    }
    commit(msg);
    if (c % 10 == 9 && c < 59) repo.tag(fmt::format("v{}", c / 10 + 1));
  }
  repo.tag("v6");
  return repo.path();
}

std::vector<std::string> write_corpus(const std::string& dir, const CorpusConfig& config) {
  fs::create_directories(dir);
  const auto projects = generate_corpus(config);
  std::vector<std::string> out;
  std::string list;
  for (const auto& d : projects) {
    const std::string name = d.meta.front().project + ".csv";
    save_dataset((fs::path(dir) / name).string(), d);
    out.push_back(name);
    list += (list.empty() ? "" : ", ") + name;
  }
  std::ofstream conf(fs::path(dir) / "corpus.conf", std::ios::binary);
  conf << "# Synthetic corpus; every dataset is combined, file-level, just-in-time.\n"
       << "projects = " << list << "\n"
       << "modes = P, C, P+C\n"
       << "learners = nb, lr, svm, rf\n"
       << "split = cross_val\nrepeats = 5\nfolds = 5\n"
       << "seed = " << config.seed << "\n";
  return out;
}

CorpusConfig stagnant_corpus_config() {
  CorpusConfig c = shipped_corpus_config();
  c.seed = 606;
  c.base.stagnation = 1.0;
  c.base.product_signal = 1.2;
  c.base.process_signal = 1.2;
  c.base.churn_persistence = 1.0;
  return c;
}

std::map<std::string, std::string> write_fixtures(const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path root = fs::absolute(out_dir);
  std::map<std::string, std::string> made;
  made["szz"] = build_szz_fixture((root / "szz").string()).path;
  made["process"] = build_process_fixture((root / "process").string(), (root / "process-releases.csv").string()).path;
  made["process-releases"] = (root / "process-releases.csv").string();
  build_small_fixture((root / "small").string());
  made["small"] = (root / "small").string();
  build_merge_fixture((root / "merge").string());
  made["merge"] = (root / "merge").string();
  made["pipeline"] = build_pipeline_fixture((root / "pipeline").string());
  write_corpus((root / "corpus").string(), shipped_corpus_config());
  made["corpus"] = (root / "corpus").string();
  write_corpus((root / "stagnant").string(), stagnant_corpus_config());
  made["stagnant"] = (root / "stagnant").string();
  return made;
}

}  // namespace defectlab
