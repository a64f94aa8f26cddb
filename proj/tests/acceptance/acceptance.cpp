// One PASS/FAIL line per acceptance check. Exit 0 when every selected check
// passes, 1 otherwise, 77 when criterion 7 has no repositories to run on.

#include "defectlab/cli.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/evaluation.hpp"
#include "defectlab/experiments.hpp"
#include "defectlab/fixtures.hpp"
#include "defectlab/git.hpp"
#include "defectlab/labeling.hpp"
#include "defectlab/learners.hpp"
#include "defectlab/mining.hpp"
#include "defectlab/process_metrics.hpp"
#include "defectlab/random.hpp"
#include "defectlab/stats.hpp"
#include "defectlab/synthetic.hpp"
#include "oracles/evaluation_oracle.hpp"
#include "oracles/process_trace.hpp"
#include "oracles/scott_knott_oracle.hpp"
#include "pipeline.hpp"
#include "support.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

using namespace defectlab;
using defectlab::testing::TempDir;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

struct Checks {
  int criterion;
  bool ok = true;

  void check(bool pass, const std::string& what) {
    fmt::print("{} [{}] {}\n", pass ? "PASS" : "FAIL", criterion, what);
    ok = ok && pass;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string dataset_bytes(const Dataset& d) {
  std::ostringstream out;
  write_dataset_csv(out, d);
  return out.str();
}

const VarianceRow* find_row(const std::vector<VarianceRow>& rows, const std::string& learner,
                            const std::string& mode, const std::string& measure) {
  for (const auto& r : rows)
    if (r.learner == learner && r.mode == mode && r.measure == measure) return &r;
  return nullptr;
}

// SZZ on the 12-commit fixture.
int criterion1() {
  Checks c{1};
  TempDir dir("acc1");
  const auto fx = build_szz_fixture(dir / "repo");
  const auto t0 = std::chrono::steady_clock::now();
  dump_history(fx.path, dir / "dump.jsonl");
  const auto history = load_dump(dir / "dump.jsonl");
  GitRepo repo(fx.path);
  GitBlameProvider blame(repo);
  const auto labels = label_history(history, blame, default_fix_keywords());
  const double elapsed = seconds_since(t0);

  std::size_t hits = 0, false_labels = 0;
  for (const auto& l : labels)
    (l.inducing_hash == fx.inducing && l.canonical_id == fx.file ? hits : false_labels)++;
  c.check(hits == 1, fmt::format("inducing pair ({}, {}) labelled exactly once: {}", fx.inducing.substr(0, 10),
                                 fx.file, hits));
  c.check(false_labels == 0, fmt::format("false labels = 0: {}", false_labels));
  c.check(elapsed < 5.0, fmt::format("mine + label runtime < 5 s: {:.3f} s", elapsed));
  return c.ok ? 0 : 1;
}

// All process metrics on the 6-commit fixture against the hand trace.
int criterion2() {
  Checks c{2};
  TempDir dir("acc2");
  const auto fx = build_process_fixture(dir / "repo", dir / "releases.csv");
  dump_history(fx.path, dir / "dump.jsonl");
  auto h = load_dump(dir / "dump.jsonl");
  h.releases = load_releases(fx.releases_csv);
  h.commit_release = assign_releases(h.commits, h.releases);
  const auto rows = compute_process_rows(h, {});
  const auto expected = oracle::process_trace();
  c.check(rows.size() == expected.size(), fmt::format("row count {} == {}", rows.size(), expected.size()));

  const auto& names = process_metric_names();
  c.check(names.size() == 21, fmt::format("metric count {} == 21", names.size()));
  std::size_t exact_bad = 0, real_bad = 0, key_bad = 0, cells = 0;
  for (std::size_t i = 0; i < std::min(rows.size(), expected.size()); ++i) {
    const auto& e = expected[i];
    if (rows[i].commit_hash != fx.commits[static_cast<std::size_t>(e.commit - 1)] ||
        rows[i].canonical_id != e.file || rows[i].release_index != e.release)
      ++key_bad;
    const auto v = rows[i].values();
    for (std::size_t j = 0; j < names.size(); ++j) {
      ++cells;
      if (std::floor(e.values[j]) == e.values[j]) {
        if (v[j] != e.values[j]) {
          ++exact_bad;
          fmt::print("  mismatch c{} {} {}: {} != {}\n", e.commit, e.file, names[j], v[j], e.values[j]);
        }
      } else if (!(std::fabs(v[j] - e.values[j]) <= 1e-9)) {
        ++real_bad;
        fmt::print("  mismatch c{} {} {}: {} != {}\n", e.commit, e.file, names[j], v[j], e.values[j]);
      }
    }
  }
  c.check(key_bad == 0, fmt::format("row keys (commit, file, release) match: {} mismatches", key_bad));
  c.check(exact_bad == 0, fmt::format("count-valued cells exact: {} of {} cells differ", exact_bad, cells));
  c.check(real_bad == 0, fmt::format("real-valued cells within 1e-9: {} differ", real_bad));
  return c.ok ? 0 : 1;
}

// Evaluation measures against brute force, plus degenerate scorers.
int criterion3() {
  Checks c{3};
  Rng rng(31337);
  int auc_bad = 0, popt_bad = 0, ifa_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.index(12);
    std::vector<double> s(n), effort(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(5)) / 4.0;
      y[i] = rng.uniform() < 0.4;
      effort[i] = static_cast<double>(rng.index(6));
    }
    auc_bad += auc(s, y) != oracle::auc(s, y);
    popt_bad += popt20(s, y, effort) != oracle::popt20(s, y, effort);
    ifa_bad += ifa(s, y, effort) != oracle::ifa(s, y, effort);
  }
  c.check(auc_bad == 0, fmt::format("auc == brute force on 1000 instances (n <= 12): {} differ", auc_bad));
  c.check(popt_bad == 0, fmt::format("popt20 == brute force on 1000 instances: {} differ", popt_bad));
  c.check(ifa_bad == 0, fmt::format("ifa == brute force on 1000 instances: {} differ", ifa_bad));

  const auto constant = evaluate(std::vector<double>(8, 0.5), std::vector<int>(8, 1),
                                 {1, 0, 1, 0, 0, 1, 0, 0}, std::vector<double>(8, 10));
  c.check(constant.constant_scores && !constant.auc &&
              constant.flags().find("auc:constant-scores") != std::string::npos,
          fmt::format("constant scorer flags auc undefined: flags='{}'", constant.flags()));

  Rng draws(2718);
  double sum = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> s(100);
    std::vector<int> y(100);
    for (std::size_t i = 0; i < 100; ++i) {
      s[i] = draws.uniform();
      y[i] = draws.uniform() < 0.3;
    }
    y[0] = 1;
    y[1] = 0;
    sum += *auc(s, y);
  }
  const double mean = sum / 1000;
  c.check(std::fabs(mean - 0.5) <= 0.02, fmt::format("uniform scorer mean auc {:.4f} in 0.5 +/- 0.02", mean));
  return c.ok ? 0 : 1;
}

bool on_segment(const std::vector<double>& p, const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    num += (p[j] - a[j]) * (b[j] - a[j]);
    den += (b[j] - a[j]) * (b[j] - a[j]);
  }
  const double t = den > 0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (std::fabs(p[j] - (a[j] + t * (b[j] - a[j]))) > 1e-9) return false;
  return true;
}

// SMOTE balance, convexity and test-set purity.
int criterion4() {
  Checks c{4};
  SyntheticConfig s;
  s.seed = 404;
  s.defect_rate = 0.15;
  const Dataset data = select_mode(generate_project(s, "smote"), Mode::process);
  const auto plan = cross_val_splits(data, 1, 5, 17);
  const auto& pair = plan.pairs.front();
  auto [train, test] = preprocess(data.subset(pair.train), data.subset(pair.test));

  const auto balanced = smote(train, {5, 99});
  const std::size_t pos = balanced.positives(), neg = balanced.size() - pos;
  c.check(pos == neg, fmt::format("classes exactly balanced: {} defective, {} clean", pos, neg));

  const int minority = train.positives() * 2 < train.size() ? 1 : 0;
  std::vector<const std::vector<double>*> minority_rows;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train.y[i] == minority) minority_rows.push_back(&train.X[i]);
  std::size_t synthetic = 0, off_segment = 0;
  for (std::size_t i = 0; i < balanced.size(); ++i) {
    if (!balanced.meta[i].synthetic) continue;
    ++synthetic;
    bool found = false;
    for (std::size_t a = 0; a < minority_rows.size() && !found; ++a)
      for (std::size_t b = a + 1; b < minority_rows.size() && !found; ++b)
        found = on_segment(balanced.X[i], *minority_rows[a], *minority_rows[b]);
    off_segment += !found;
  }
  c.check(synthetic > 0 && off_segment == 0,
          fmt::format("synthetic rows on a minority segment (1e-9): {} of {} off", off_segment, synthetic));

  const std::string data_before = dataset_bytes(data);
  const std::string test_before = dataset_bytes(test);
  ModelSpec spec;
  spec.kind = LearnerKind::rf;
  spec.seed = 3;
  run_fold(data, pair, spec, true, 99);
  const auto again = preprocess(data.subset(pair.train), data.subset(pair.test)).second;
  c.check(dataset_bytes(data) == data_before, "source rows byte-identical after a SMOTE fold");
  c.check(dataset_bytes(again) == test_before, "preprocessed test rows byte-identical after a SMOTE fold");

  std::size_t leaked = 0;
  for (const auto& m : test.meta) leaked += m.synthetic;
  c.check(leaked == 0 && test.size() == pair.test.size(),
          fmt::format("test partition holds no synthetic rows: {} of {}", leaked, test.size()));
  return c.ok ? 0 : 1;
}

// Scott-Knott, A12 and Spearman.
int criterion5() {
  Checks c{5};
  Rng rng(5);
  auto draw = [&](std::size_t n, double shift) {
    std::vector<double> v(n);
    for (auto& x : v) x = shift + rng.normal();
    return v;
  };

  bool one_rank = true;
  for (int t = 0; t < 20; ++t) {
    const auto base = draw(25, 0);
    std::vector<RankGroup> same = {{"a", base}, {"b", base}, {"c", base}, {"d", base}};
    for (const auto& e : scott_knott(same, static_cast<std::uint64_t>(t))) one_rank = one_rank && e.rank == 1;
  }
  c.check(one_rank, "identical distributions receive one rank (20 seeds)");

  const auto two = scott_knott({{"zeros", std::vector<double>(10, 0.0)}, {"ones", std::vector<double>(10, 1.0)}}, 1);
  c.check(two.size() == 2 && two[0].name == "ones" && two[0].rank == 1 && two[1].rank == 2,
          "{0}x10 vs {1}x10 receive ranks 1 and 2");

  int disagreements = 0, instances = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 1 + rng.index(4);
    std::vector<RankGroup> groups;
    for (std::size_t g = 0; g < k; ++g)
      groups.push_back({"g" + std::to_string(g), draw(3 + rng.index(10), 1.5 * static_cast<double>(rng.index(3)))});
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(t);
    const auto got = scott_knott(groups, seed);
    std::vector<std::vector<double>> values;
    for (const auto& g : sort_groups(groups, true)) values.push_back(g.values);
    const auto expected = oracle::scott_knott(values, [seed](const std::vector<double>& l, const std::vector<double>& r,
                                                             std::size_t lo, std::size_t hi) {
      const double e = a12(l, r);
      return bootstrap_sig(l, r, derive_seed(seed, {lo, hi})).significant && std::max(e, 1 - e) >= 0.6;
    });
    ++instances;
    for (std::size_t i = 0; i < got.size(); ++i)
      if (got[i].rank != expected[i]) {
        ++disagreements;
        break;
      }
  }
  c.check(disagreements == 0, fmt::format("agrees with exhaustive boundary search on {} instances of <= 4 groups: "
                                          "{} disagree",
                                          instances, disagreements));

  // Hand values: 4 wins + 1 tie over 9 pairs; tied ranks give 4.5 / sqrt(22.5).
  const double e = a12({3, 5, 7}, {1, 3, 9});
  c.check(std::fabs(e - 5.5 / 9) <= 1e-12, fmt::format("a12({{3,5,7}}, {{1,3,9}}) = {:.12f} == 5.5/9", e));
  const double rho = *spearman({1, 2, 2, 4}, {1, 3, 2, 4});
  c.check(std::fabs(rho - 4.5 / std::sqrt(22.5)) <= 1e-12,
          fmt::format("spearman({{1,2,2,4}}, {{1,3,2,4}}) = {:.12f} == 4.5/sqrt(22.5)", rho));
  return c.ok ? 0 : 1;
}

// Shipped corpus: rf is more stable than lr; LR gradient check.
int criterion6() {
  Checks c{6};
  TempDir dir("acc6");
  write_corpus(dir.path().string(), shipped_corpus_config());
  auto config = load_config(dir / "corpus.conf");
  config.modes = {Mode::process};
  config.learners = {LearnerKind::lr, LearnerKind::rf};
  const auto corpus = load_corpus(config);
  c.check(corpus.projects.size() == 30, fmt::format("shipped corpus has 30 projects: {}", corpus.projects.size()));
  std::vector<std::string> skips;
  const auto rows = rq_performance(corpus, config, Granularity::file, &skips);
  const auto report = variance_report(rows, {"recall", "auc"});
  for (const std::string measure : {"recall", "auc"}) {
    const auto* rf = find_row(report, "rf", "P", measure);
    const auto* lr = find_row(report, "lr", "P", measure);
    const bool ok = rf && lr && rf->iqr < lr->iqr;
    c.check(ok, fmt::format("IQR(rf) < IQR(lr) on {} (mode P, seed {}): {:.4f} vs {:.4f}", measure, config.seed,
                            rf ? rf->iqr : NAN, lr ? lr->iqr : NAN));
  }

  Rng rng(66);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 30, f = 5;
    Matrix X(n, std::vector<double>(f));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : X[i]) v = rng.normal();
      y[i] = rng.uniform() < 0.5;
    }
    LinearModel m;
    m.beta.resize(f);
    for (auto& b : m.beta) b = rng.normal();
    m.beta0 = rng.normal();
    const double lambda = 0.01;
    const auto g = logistic_gradient(m, X, y, lambda);
    const double h = 1e-6;
    for (std::size_t j = 0; j <= f; ++j) {
      LinearModel up = m, down = m;
      (j < f ? up.beta[j] : up.beta0) += h;
      (j < f ? down.beta[j] : down.beta0) -= h;
      const double numeric = (logistic_loss(up, X, y, lambda) - logistic_loss(down, X, y, lambda)) / (2 * h);
      const double analytic = j < f ? g.beta[j] : g.beta0;
      worst = std::max(worst, std::fabs(numeric - analytic) / std::max(1.0, std::fabs(numeric)));
    }
  }
  c.check(worst <= 1e-5, fmt::format("LR gradient vs central differences (h 1e-6): max rel err {:.2e} <= 1e-5", worst));
  return c.ok ? 0 : 1;
}

std::vector<std::string> real_repos() {
  const char* env = std::getenv("DEFECTLAB_REAL_REPOS");
  std::vector<std::string> out;
  if (!env) return out;
  std::stringstream in(env);
  std::string item;
  while (std::getline(in, item, ':'))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Real repositories listed in DEFECTLAB_REAL_REPOS (colon separated).
int criterion7() {
  const auto repos = real_repos();
  if (repos.size() < 5) {
    fmt::print("SKIP [7] needs >= 5 repositories in DEFECTLAB_REAL_REPOS, got {}\n", repos.size());
    return kSkip;
  }
  Checks c{7};
  TempDir dir("acc7");
  std::string list;
  for (std::size_t i = 0; i < repos.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path w = dir.path() / fmt::format("repo{:02}", i);
    fs::create_directories(w);
    auto p = [&](const char* name) { return (w / name).string(); };
    const std::vector<std::vector<std::string>> steps = {
        {"mine", "--repo", repos[i], "--out", p("history.jsonl")},
        {"releases", "--repo", repos[i], "--out", p("releases.csv")},
        {"label", "--history", p("history.jsonl"), "--repo", repos[i], "--releases", p("releases.csv"), "--out",
         p("labels.csv")},
        {"metrics", "process", "--history", p("history.jsonl"), "--labels", p("labels.csv"), "--releases",
         p("releases.csv"), "--out", p("process.csv")},
        {"metrics", "product", "--history", p("history.jsonl"), "--repo", repos[i], "--out", p("product.csv")},
        {"assemble", "--process", p("process.csv"), "--product", p("product.csv"), "--mode", "P+C", "--out",
         p("data.csv")},
    };
    bool ok = true;
    for (const auto& step : steps) {
      std::ostringstream out, err;
      if (cli::dispatch(step, out, err) != 0) {
        fmt::print("  {}: {} failed: {}", repos[i], step[0], err.str());
        ok = false;
        break;
      }
    }
    const double elapsed = seconds_since(t0);
    c.check(ok, fmt::format("{} mined, labelled and assembled", repos[i]));
    c.check(elapsed <= 600, fmt::format("{} pipeline <= 10 min: {:.1f} s", repos[i], elapsed));
    if (ok) list += (list.empty() ? "" : ", ") + (w / "data.csv").string();
  }
  if (list.empty()) return 1;
  std::istringstream conf("projects = " + list + "\nmodes = P, C\nlearners = rf\nseed = 2024\n");
  const auto config = parse_config(conf, dir.path().string());
  std::vector<std::string> skips;
  const auto rows = rq_performance(load_corpus(config), config, Granularity::file, &skips);
  for (const auto& s : skips) fmt::print("  skip {}\n", s);
  const auto report = variance_report(rows, {"auc", "recall"});
  for (const std::string measure : {"auc", "recall"}) {
    const auto* p = find_row(report, "rf", "P", measure);
    const auto* k = find_row(report, "rf", "C", measure);
    c.check(p && k && p->median > k->median,
            fmt::format("median {} rf/P > rf/C: {:.4f} vs {:.4f}", measure, p ? p->median : NAN, k ? k->median : NAN));
  }
  return c.ok ? 0 : 1;
}

// Stagnant corpus: product scores track training-period values more than process scores.
int criterion8() {
  Checks c{8};
  TempDir dir("acc8");
  write_corpus(dir.path().string(), stagnant_corpus_config());
  auto config = load_config(dir / "corpus.conf");
  config.modes = {Mode::process, Mode::product};
  std::vector<std::string> skips;
  const auto rows = rq6_stagnation(load_corpus(config), config, &skips);
  std::map<std::string, const StagnationRow*> by_mode;
  for (const auto& r : rows) by_mode[r.mode] = &r;
  const auto* p = by_mode.count("P") ? by_mode["P"] : nullptr;
  const auto* k = by_mode.count("C") ? by_mode["C"] : nullptr;
  const bool defined = p && k && p->rho && k->rho && p->p && k->p;
  c.check(defined, "rho and p defined for P and C");
  if (!defined) return 1;
  c.check(*k->rho > *p->rho, fmt::format("rho(product) > rho(process): {:.4f} vs {:.4f} over {} / {} files", *k->rho,
                                         *p->rho, k->files, p->files));
  c.check(*k->p < 0.001, fmt::format("p(product) < 0.001: {:.3g}", *k->p));
  c.check(*p->p < 0.001, fmt::format("p(process) < 0.001: {:.3g}", *p->p));
  return c.ok ? 0 : 1;
}

// Two full pipeline runs in separate directories produce identical bytes.
int criterion9() {
  Checks c{9};
  TempDir a("acc9a"), b("acc9b");
  const auto first = defectlab::testing::run_pipeline(a.path().string());
  const auto second = defectlab::testing::run_pipeline(b.path().string());
  c.check(first.failed_step == -1 && second.failed_step == -1, "both pipeline runs exit 0");
  if (first.failed_step != -1 || second.failed_step != -1) {
    fmt::print("{}{}", first.log, second.log);
    return 1;
  }
  for (const auto& artifact : first.artifacts) {
    const auto x = slurp(a.path() / artifact), y = slurp(b.path() / artifact);
    c.check(!x.empty() && x == y, fmt::format("{} byte-identical ({} bytes)", artifact, x.size()));
  }
  return c.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("defectlab acceptance checks");
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<int()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                      criterion6, criterion7, criterion8, criterion9};
  int status = 0;
  for (int i = 1; i <= 9; ++i) {
    if (only && only != i) continue;
    int code = 1;
    try {
      code = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      fmt::print("FAIL [{}] threw: {}\n", i, e.what());
    }
    if (code == kSkip) {
      if (only) return kSkip;
      continue;
    }
    if (code != 0) status = 1;
  }
  return status;
}
