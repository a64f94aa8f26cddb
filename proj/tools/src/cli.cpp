#include "defectlab/cli.hpp"

#include "defectlab/dataset.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/evaluation.hpp"
#include "defectlab/experiments.hpp"
#include "defectlab/fixtures.hpp"
#include "defectlab/git.hpp"
#include "defectlab/labeling.hpp"
#include "defectlab/manifest.hpp"
#include "defectlab/mining.hpp"
#include "defectlab/numeric.hpp"
#include "defectlab/process_metrics.hpp"
#include "defectlab/product_metrics.hpp"
#include "defectlab/stats.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace defectlab::cli {

namespace fs = std::filesystem;

namespace {

std::string base_name(const std::string& path) { return fs::path(path).filename().string(); }

/// Stage record written as `<output>.manifest.json`. Paths are reduced to
/// file names so that the same inputs in another directory hash the same.
struct StageRecord {
  std::string stage;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::vector<std::string> skips;

  void write(const std::string& manifest_path) const {
    RunManifest m;
    m.tool_version = tool_version();
    m.stage = stage;
    std::string canon = "stage=" + stage + "\n";
    auto params_sorted = params;
    std::sort(params_sorted.begin(), params_sorted.end());
    for (const auto& [k, v] : params_sorted) canon += k + "=" + v + "\n";
    m.config_hash = sha256_hex(canon);
    m.seed = seed;
    for (const auto& in : inputs) m.inputs.push_back({base_name(in), sha256_file(in)});
    for (const auto& o : outputs) m.outputs.push_back({base_name(o), sha256_file(o)});
    m.skips = skips;
    write_manifest(manifest_path, m);
  }
};

std::ofstream open_out(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("no such file: " + path);
}

ProjectHistory load_history(const std::string& dump, const std::string& releases) {
  require_file(dump);
  auto history = load_dump(dump);
  if (!releases.empty()) {
    require_file(releases);
    history.releases = load_releases(releases);
    history.commit_release = assign_releases(history.commits, history.releases);
  }
  return history;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string config;
};

struct MineArgs {
  std::string repo, out;
};

struct ReleasesArgs {
  std::string file, repo, out;
};

struct LabelArgs {
  std::string history, releases, repo, out, keywords, blame_file, record_blame;
  bool no_line_filter = false;
  std::vector<std::string> extensions;
};

struct MetricsArgs {
  std::string history, releases, labels, repo, out, import;
  std::vector<std::string> extensions;
};

struct AssembleArgs {
  std::string process, product, mode = "P+C", granularity = "file", level = "jit", out, project;
};

struct ExperimentArgs {
  std::string config, out;
  int rq = 1;
};

struct RankArgs {
  std::string results, measure = "auc", direction, out;
};

struct ReportArgs {
  std::string history, releases, labels, metadata, results, out;
};

struct FixturesArgs {
  std::string out;
};

int run_mine(const MineArgs& a, std::ostream& out) {
  if (!fs::is_directory(a.repo)) throw ConfigError("no such repository: " + a.repo);
  dump_history(a.repo, a.out);
  GitRepo repo(a.repo);
  std::string head = "empty";
  if (repo.has_commits()) {
    head = repo.run({"rev-parse", "HEAD"});
    while (!head.empty() && head.back() == '\n') head.pop_back();
  }
  StageRecord{"mine", {{"head", head}}, {}, {a.out}, 0, {}}.write(a.out + ".manifest.json");
  fmt::print(out, "mined {} -> {}\n", a.repo, a.out);
  return 0;
}

int run_releases(const ReleasesArgs& a, std::ostream& out) {
  if (a.file.empty() == a.repo.empty()) throw ConfigError("releases needs exactly one of --file or --repo");
  std::vector<Release> releases;
  if (!a.file.empty()) {
    require_file(a.file);
    releases = load_releases(a.file);
  } else {
    if (!fs::is_directory(a.repo)) throw ConfigError("no such repository: " + a.repo);
    releases = releases_from_tags(GitRepo(a.repo));
    if (releases.empty()) throw ConfigError("repository has no tags: " + a.repo);
  }
  if (a.out.empty()) {
    write_releases(out, releases);
  } else {
    auto f = open_out(a.out);
    write_releases(f, releases);
    f.close();
    fmt::print(out, "{} releases -> {}\n", releases.size(), a.out);
  }
  return 0;
}

int run_label(const LabelArgs& a, std::ostream& out, std::ostream& err) {
  const auto history = load_history(a.history, a.releases);
  LabelingOptions options;
  options.line_filter = !a.no_line_filter;
  if (!a.extensions.empty()) options.extensions = a.extensions;
  const auto keywords = a.keywords.empty() ? default_fix_keywords() : load_keywords(a.keywords);

  std::unique_ptr<GitRepo> repo;
  std::unique_ptr<BlameProvider> provider;
  if (!a.blame_file.empty()) {
    require_file(a.blame_file);
    provider = std::make_unique<BlameFileProvider>(a.blame_file);
  } else {
    if (a.repo.empty()) throw ConfigError("label needs --repo or --blame-file");
    if (!fs::is_directory(a.repo)) throw ConfigError("no such repository: " + a.repo);
    repo = std::make_unique<GitRepo>(a.repo);
    provider = std::make_unique<GitBlameProvider>(*repo);
  }
  RecordingBlameProvider recorder(*provider);
  std::vector<std::string> warnings;
  const auto labels = label_history(history, recorder, keywords, options, &warnings);
  for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);

  {
    auto f = open_out(a.out);
    write_labels_csv(f, labels);
  }
  std::vector<std::string> outputs = {a.out};
  if (!a.record_blame.empty()) {
    auto f = open_out(a.record_blame);
    write_blame_records(f, recorder.records());
    f.close();
    outputs.push_back(a.record_blame);
  }
  std::vector<std::string> inputs = {a.history};
  if (!a.releases.empty()) inputs.push_back(a.releases);
  if (!a.keywords.empty()) inputs.push_back(a.keywords);
  if (!a.blame_file.empty()) inputs.push_back(a.blame_file);
  std::string exts;
  for (const auto& e : options.extensions) exts += e + ";";
  StageRecord{"label",
              {{"line_filter", options.line_filter ? "on" : "off"}, {"extensions", exts}},
              inputs, outputs, 0, warnings}
      .write(a.out + ".manifest.json");
  fmt::print(out, "{} labels from {} defective commits -> {}\n", labels.size(), count_defective_commits(labels),
             a.out);
  return 0;
}

int run_process_metrics(const MetricsArgs& a, std::ostream& out) {
  const auto history = load_history(a.history, a.releases);
  require_file(a.labels);
  const auto labels = load_labels_csv(a.labels);
  LabelingOptions options;
  if (!a.extensions.empty()) options.extensions = a.extensions;
  const auto rows = compute_process_rows(history, labels, options);
  {
    auto f = open_out(a.out);
    write_process_csv(f, rows);
  }
  std::vector<std::string> inputs = {a.history, a.labels};
  if (!a.releases.empty()) inputs.push_back(a.releases);
  StageRecord{"metrics-process", {}, inputs, {a.out}, 0, {}}.write(a.out + ".manifest.json");
  fmt::print(out, "{} process rows -> {}\n", rows.size(), a.out);
  return 0;
}

int run_product_metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
  const auto history = load_history(a.history, a.releases);
  if (!fs::is_directory(a.repo)) throw ConfigError("no such repository: " + a.repo);
  ProductOptions options;
  if (!a.extensions.empty()) options.extensions = a.extensions;
  auto rows = compute_product_rows(history, GitRepo(a.repo), options);
  std::vector<std::string> warnings;
  std::vector<std::string> inputs = {a.history};
  if (!a.import.empty()) {
    require_file(a.import);
    rows = import_product_csv(a.import, std::move(rows), &warnings);
    inputs.push_back(a.import);
  }
  for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);
  {
    auto f = open_out(a.out);
    write_product_csv(f, rows);
  }
  StageRecord{"metrics-product", {}, inputs, {a.out}, 0, warnings}.write(a.out + ".manifest.json");
  fmt::print(out, "{} product rows -> {}\n", rows.size(), a.out);
  return 0;
}

int run_assemble(const AssembleArgs& a, std::ostream& out) {
  const Mode mode = mode_from_string(a.mode);
  const Granularity gran = granularity_from_string(a.granularity);
  const LabelLevel level = level_from_string(a.level);
  require_file(a.process);
  std::ifstream pin(a.process, std::ios::binary);
  const auto process = read_process_csv(pin);
  std::optional<std::vector<ProductRow>> product;
  if (!a.product.empty()) {
    require_file(a.product);
    std::ifstream in(a.product, std::ios::binary);
    product = read_product_csv(in);
  } else if (mode != Mode::process) {
    throw ConfigError(fmt::format("mode {} needs --product", a.mode));
  }
  const std::string project = a.project.empty() ? fs::path(a.out).stem().string() : a.project;
  AssembleReport report;
  const auto data = assemble(process, product ? &*product : nullptr, mode, gran, level, project, &report);
  save_dataset(a.out, data);
  std::vector<std::string> inputs = {a.process};
  if (product) inputs.push_back(a.product);
  std::vector<std::string> skips;
  if (report.dropped_process)
    skips.push_back(fmt::format("{} process rows without product partner", report.dropped_process));
  if (report.dropped_product)
    skips.push_back(fmt::format("{} product rows without process partner", report.dropped_product));
  StageRecord{"assemble",
              {{"mode", to_string(mode)}, {"granularity", to_string(gran)}, {"level", to_string(level)},
               {"project", project}},
              inputs, {a.out}, 0, skips}
      .write(a.out + ".manifest.json");
  fmt::print(out, "{} rows, {} defective -> {}\n", data.size(), data.positives(), a.out);
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a, const Globals& g, std::ostream& out) {
  const std::string config_path = a.config.empty() ? g.config : a.config;
  if (config_path.empty()) throw ConfigError("experiment needs --config");
  require_file(config_path);
  auto config = load_config(config_path);
  if (g.seed) config.seed = *g.seed;
  if (g.jobs) config.jobs = *g.jobs;
  bool reused = false;
  const auto result = run_experiment(config, a.rq, a.out, &reused);
  for (const auto& s : result.skips) fmt::print(out, "skip: {}\n", s);
  fmt::print(out, "rq{} {} {} files in {}\n", a.rq, reused ? "reused" : "wrote", result.files.size(), a.out);
  return 0;
}

int run_rank(const RankArgs& a, const Globals& g, std::ostream& out) {
  require_file(a.results);
  const auto& names = measure_names();
  if (std::find(names.begin(), names.end(), a.measure) == names.end())
    throw ConfigError("unknown measure: " + a.measure);
  ScottKnottOptions opts;
  if (a.direction.empty()) opts.higher_is_better = higher_is_better(a.measure);
  else if (a.direction == "max") opts.higher_is_better = true;
  else if (a.direction == "min") opts.higher_is_better = false;
  else throw ConfigError("direction must be max or min");
  const auto rows = load_results_csv(a.results);
  const auto groups = rank_groups(rows, a.measure);
  if (groups.empty()) throw DataError("no defined " + a.measure + " values in " + a.results);
  const std::uint64_t seed = g.seed.value_or(1);
  const auto ranks = scott_knott(groups, seed, opts);
  if (a.out.empty()) {
    write_rank_csv(out, ranks);
    return 0;
  }
  {
    auto f = open_out(a.out);
    write_rank_csv(f, ranks);
  }
  StageRecord{"rank", {{"measure", a.measure}, {"direction", opts.higher_is_better ? "max" : "min"}},
              {a.results}, {a.out}, seed, {}}
      .write(a.out + ".manifest.json");
  fmt::print(out, "{} groups in {} ranks -> {}\n", ranks.size(), ranks.empty() ? 0 : ranks.back().rank, a.out);
  return 0;
}

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::unchecked: return "unchecked";
  }
  return "?";
}

void write_report(const ReportArgs& a, std::ostream& os) {
  if (!a.history.empty()) {
    const auto history = load_history(a.history, a.releases);
    std::optional<int> defective;
    if (!a.labels.empty()) {
      require_file(a.labels);
      defective = count_defective_commits(load_labels_csv(a.labels));
    }
    std::optional<ProjectMetadata> meta;
    if (!a.metadata.empty()) {
      require_file(a.metadata);
      meta = load_project_metadata(a.metadata);
    }
    const auto report = validate_project(history, {}, defective, meta);
    fmt::print(os, "# project checks ({})\n", report.passed() ? "pass" : "fail");
    for (const auto& c : report.checks) fmt::print(os, "{:<22} {:<9} {}\n", c.name, status_name(c.status), c.detail);
  }
  if (!a.results.empty()) {
    require_file(a.results);
    const auto rows = load_results_csv(a.results);
    fmt::print(os, "{}# results: {} rows\n", a.history.empty() ? "" : "\n", rows.size());
    fmt::print(os, "{:<28} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "group", "recall", "prec", "pf", "auc", "popt20",
               "ifa");
    std::map<std::string, std::map<std::string, std::vector<double>>> by_group;
    for (const auto& r : rows) {
      const std::string g = r.learner + "/" + r.mode + "/" + r.granularity;
      for (const auto& m : measure_names())
        if (auto v = r.result.get(m)) by_group[g][m].push_back(*v);
    }
    for (auto& [g, ms] : by_group) {
      std::string line = fmt::format("{:<28}", g);
      for (const auto& m : measure_names()) {
        auto it = ms.find(m);
        if (it == ms.end() || it->second.empty()) line += fmt::format(" {:>8}", "-");
        else line += fmt::format(" {:>8.3f}", median(it->second));
      }
      fmt::print(os, "{}\n", line);
    }
  }
}

int run_report(const ReportArgs& a, std::ostream& out) {
  if (a.history.empty() && a.results.empty()) throw ConfigError("report needs --history and/or --results");
  if (a.out.empty()) {
    write_report(a, out);
    return 0;
  }
  {
    auto f = open_out(a.out);
    write_report(a, f);
  }
  fmt::print(out, "report -> {}\n", a.out);
  return 0;
}

int run_fixtures(const FixturesArgs& a, std::ostream& out) {
  const auto made = write_fixtures(a.out);
  for (const auto& [name, path] : made) fmt::print(out, "{:<18} {}\n", name, path);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"defectlab: mine repositories, label defects, compute metrics, run defect-prediction experiments",
               "defectlab"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  int jobs = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (experiment: overrides the config)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker cap")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Experiment configuration file");

  MineArgs mine;
  auto* c_mine = app.add_subcommand("mine", "Dump the commit history of a repository as JSON lines");
  c_mine->add_option("--repo", mine.repo, "Repository directory")->required();
  c_mine->add_option("--out", mine.out, "Dump file")->required();

  ReleasesArgs rel;
  auto* c_rel = app.add_subcommand("releases", "Validate a releases CSV or derive one from tags");
  c_rel->add_option("--file", rel.file, "Releases CSV (tag,date)");
  c_rel->add_option("--repo", rel.repo, "Derive releases from this repository's tags");
  c_rel->add_option("--out", rel.out, "Write normalized releases here (default: stdout)");

  LabelArgs lab;
  auto* c_lab = app.add_subcommand("label", "Find defect-inducing commits (SZZ)");
  c_lab->add_option("--history", lab.history, "Dump file")->required();
  c_lab->add_option("--repo", lab.repo, "Repository directory for blame");
  c_lab->add_option("--out", lab.out, "Labels CSV")->required();
  c_lab->add_option("--keywords", lab.keywords, "Fix keyword list, one per line");
  c_lab->add_flag("--no-line-filter", lab.no_line_filter, "Trace blank and comment lines too");
  c_lab->add_option("--releases", lab.releases, "Releases CSV");
  c_lab->add_option("--blame-file", lab.blame_file, "Offline blame records (JSON lines) instead of --repo");
  c_lab->add_option("--record-blame", lab.record_blame, "Save the blame records used");
  c_lab->add_option("--ext", lab.extensions, "Tracked file extensions (default .java)");

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "Compute process or product metrics");
  c_met->require_subcommand(1);
  auto* c_proc = c_met->add_subcommand("process", "Change metrics per (file, commit)");
  c_proc->add_option("--history", met.history, "Dump file")->required();
  c_proc->add_option("--labels", met.labels, "Labels CSV")->required();
  c_proc->add_option("--out", met.out, "Process metrics CSV")->required();
  c_proc->add_option("--releases", met.releases, "Releases CSV");
  c_proc->add_option("--ext", met.extensions, "Tracked file extensions (default .java)");
  auto* c_prod = c_met->add_subcommand("product", "Static code metrics per (file, commit)");
  c_prod->add_option("--history", met.history, "Dump file")->required();
  c_prod->add_option("--repo", met.repo, "Repository directory")->required();
  c_prod->add_option("--out", met.out, "Product metrics CSV")->required();
  c_prod->add_option("--import", met.import, "External metric table to overlay");
  c_prod->add_option("--releases", met.releases, "Releases CSV");
  c_prod->add_option("--ext", met.extensions, "Tracked file extensions (default .java)");

  AssembleArgs asm_;
  auto* c_asm = app.add_subcommand("assemble", "Join metric tables into a dataset");
  c_asm->add_option("--process", asm_.process, "Process metrics CSV")->required();
  c_asm->add_option("--product", asm_.product, "Product metrics CSV");
  c_asm->add_option("--mode", asm_.mode, "P | C | P+C")->capture_default_str();
  c_asm->add_option("--granularity", asm_.granularity, "file | package")->capture_default_str();
  c_asm->add_option("--level", asm_.level, "jit | release")->capture_default_str();
  c_asm->add_option("--project", asm_.project, "Project name (default: output file stem)");
  c_asm->add_option("--out", asm_.out, "Dataset CSV")->required();

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Run one research question over a corpus");
  c_exp->add_option("--config", exp.config, "Experiment configuration file");
  c_exp->add_option("--rq", exp.rq, "Research question 1..8")->required()->check(CLI::Range(1, 8));
  c_exp->add_option("--out", exp.out, "Output directory")->required();

  RankArgs rank;
  auto* c_rank = app.add_subcommand("rank", "Scott-Knott ranks of a results CSV");
  c_rank->add_option("--results", rank.results, "Results CSV")->required();
  c_rank->add_option("--measure", rank.measure, "recall|precision|pf|auc|popt20|ifa")->capture_default_str();
  c_rank->add_option("--direction", rank.direction, "max | min (default: by measure)");
  c_rank->add_option("--out", rank.out, "Rank CSV (default: stdout)");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Project sanity checks and results summary");
  c_rep->add_option("--history", rep.history, "Dump file");
  c_rep->add_option("--releases", rep.releases, "Releases CSV");
  c_rep->add_option("--labels", rep.labels, "Labels CSV (enables the defective-commit check)");
  c_rep->add_option("--metadata", rep.metadata, "Project metadata JSON {pull_requests, issues}");
  c_rep->add_option("--results", rep.results, "Results CSV");
  c_rep->add_option("--out", rep.out, "Report file (default: stdout)");

  FixturesArgs fix;
  auto* c_fix = app.add_subcommand("fixtures", "Create the test repositories and synthetic corpora");
  c_fix->add_option("--out", fix.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (seed_opt->count()) g.seed = seed;
  if (jobs_opt->count()) g.jobs = jobs;

  try {
    if (c_mine->parsed()) return run_mine(mine, out);
    if (c_rel->parsed()) return run_releases(rel, out);
    if (c_lab->parsed()) return run_label(lab, out, err);
    if (c_proc->parsed()) return run_process_metrics(met, out);
    if (c_prod->parsed()) return run_product_metrics(met, out, err);
    if (c_asm->parsed()) return run_assemble(asm_, out);
    if (c_exp->parsed()) return run_experiment_cmd(exp, g, out);
    if (c_rank->parsed()) return run_rank(rank, g, out);
    if (c_rep->parsed()) return run_report(rep, out);
    if (c_fix->parsed()) return run_fixtures(fix, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace defectlab::cli
