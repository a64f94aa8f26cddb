#include "defectlab/experiments.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/manifest.hpp"
#include "defectlab/numeric.hpp"
#include "defectlab/parallel.hpp"
#include "defectlab/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace defectlab {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

int parse_positive(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size() || v < 1) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + " must be a positive integer, got '" + value + "'");
  }
}

std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : sep) + x;
  return s;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  std::vector<std::string> names;
  for (const auto& p : projects) names.push_back(stem_of(p));
  kv["projects"] = join(names);
  std::vector<std::string> m, l;
  for (auto x : modes) m.emplace_back(to_string(x));
  for (auto x : learners) l.emplace_back(to_string(x));
  kv["modes"] = join(m);
  kv["learners"] = join(l);
  kv["split"] = split == SplitKind::cross_val ? "cross_val" : "release";
  kv["repeats"] = std::to_string(repeats);
  kv["folds"] = std::to_string(folds);
  kv["seed"] = std::to_string(seed);
  kv["measures"] = join(measures);
  kv["granularity"] = to_string(granularity);
  kv["small_samples"] = std::to_string(small_samples);
  kv["small_size"] = std::to_string(small_size);
  kv["rq6_reading"] = rq6_use_density ? "density" : "score";
  kv["rq6_learner"] = to_string(rq6_learner);
  kv["rq8_mode"] = to_string(rq8_mode);
  kv["smote"] = smote ? "on" : "off";
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

ExperimentConfig parse_config(std::istream& in, const std::string& base_dir) {
  ExperimentConfig c;
  bool has_seed = false;
  std::string projects_dir;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", lineno));
    const auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("config line {}: duplicate key '{}'", lineno, key));
    if (key == "projects") {
      for (const auto& p : split_list(value))
        c.projects.push_back(fs::path(p).is_absolute() ? p : (fs::path(base_dir) / p).string());
    } else if (key == "projects_dir") {
      projects_dir = fs::path(value).is_absolute() ? value : (fs::path(base_dir) / value).string();
    } else if (key == "modes") {
      c.modes.clear();
      for (const auto& m : split_list(value)) c.modes.push_back(mode_from_string(m));
    } else if (key == "learners") {
      c.learners.clear();
      for (const auto& l : split_list(value)) c.learners.push_back(learner_from_string(l));
    } else if (key == "split") {
      if (value == "cross_val") c.split = SplitKind::cross_val;
      else if (value == "release") c.split = SplitKind::release_based;
      else throw ConfigError("split must be cross_val or release");
    } else if (key == "repeats") {
      c.repeats = parse_positive(key, value);
    } else if (key == "folds") {
      c.folds = parse_positive(key, value);
      if (c.folds < 2) throw ConfigError("folds must be at least 2");
    } else if (key == "seed") {
      try {
        std::size_t used = 0;
        c.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("seed must be an unsigned integer");
      }
      has_seed = true;
    } else if (key == "measures") {
      c.measures = split_list(value);
      for (const auto& m : c.measures)
        if (std::find(measure_names().begin(), measure_names().end(), m) == measure_names().end())
          throw ConfigError("unknown measure '" + m + "'");
    } else if (key == "granularity") {
      c.granularity = granularity_from_string(value);
    } else if (key == "small_samples") {
      c.small_samples = parse_positive(key, value);
    } else if (key == "small_size") {
      c.small_size = parse_positive(key, value);
    } else if (key == "rq6_reading") {
      if (value != "score" && value != "density") throw ConfigError("rq6_reading must be score or density");
      c.rq6_use_density = value == "density";
    } else if (key == "rq6_learner") {
      c.rq6_learner = learner_from_string(value);
    } else if (key == "rq8_mode") {
      c.rq8_mode = mode_from_string(value);
    } else if (key == "smote") {
      if (value != "on" && value != "off") throw ConfigError("smote must be on or off");
      c.smote = value == "on";
    } else if (key == "jobs") {
      c.jobs = parse_positive(key, value);
    } else {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", lineno, key));
    }
  }
  if (!has_seed) throw ConfigError("config must set seed");
  if (!projects_dir.empty()) {
    if (!fs::is_directory(projects_dir)) throw ConfigError("projects_dir " + projects_dir + " is not a directory");
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(projects_dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path().string());
    std::sort(found.begin(), found.end());
    c.projects.insert(c.projects.end(), found.begin(), found.end());
  }
  if (c.projects.empty()) throw ConfigError("config names no projects");
  if (c.modes.empty()) throw ConfigError("mode list is empty");
  if (c.learners.empty()) throw ConfigError("learner list is empty");
  if (c.measures.empty()) throw ConfigError("measure list is empty");
  for (const auto& p : c.projects)
    if (!fs::exists(p)) throw ConfigError("dataset " + p + " does not exist");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, fs::path(path).parent_path().string());
}

Corpus load_corpus(const ExperimentConfig& config) {
  Corpus c;
  for (const auto& p : config.projects) {
    c.names.push_back(stem_of(p));
    c.projects.push_back(load_dataset(p));
  }
  return c;
}

EvalResult run_fold(const Dataset& data, const SplitPair& pair, const ModelSpec& spec,
                    bool use_smote, std::uint64_t smote_seed) {
  if (pair.test.empty()) throw DataError("test partition is empty");
  auto [train, test] = preprocess(data.subset(pair.train), data.subset(pair.test));
  if (train.feature_names.empty()) throw FitError("no feature varies in the training data");
  if (use_smote) train = smote(train, {5, smote_seed});
  const Model model = fit(spec, train);
  return evaluate(score_all(model, test.X), predict_all(model, test.X), test.y, test.effort);
}

namespace {

struct Cell {
  std::size_t project, mode, learner;
};

Dataset prepared(const Dataset& project, Mode mode, Granularity granularity) {
  Dataset d = select_mode(project, mode);
  if (granularity == Granularity::package) d = aggregate_packages(d);
  return d;
}

SplitPlan plan_for(const Dataset& d, const ExperimentConfig& config, std::size_t project) {
  if (config.split == SplitKind::release_based) return release_splits(d);
  return cross_val_splits(d, config.repeats, config.folds, derive_seed(config.seed, {project}));
}

ModelSpec spec_for(LearnerKind kind, std::uint64_t seed) {
  ModelSpec s;
  s.kind = kind;
  s.seed = seed;
  return s;
}

}  // namespace

std::vector<ResultRow> rq_performance(const Corpus& corpus, const ExperimentConfig& config,
                                      Granularity granularity, std::vector<std::string>* skips) {
  std::vector<Cell> cells;
  for (std::size_t p = 0; p < corpus.projects.size(); ++p)
    for (std::size_t m = 0; m < config.modes.size(); ++m)
      for (std::size_t l = 0; l < config.learners.size(); ++l) cells.push_back({p, m, l});
  std::vector<std::vector<ResultRow>> results(cells.size());
  std::vector<std::vector<std::string>> cell_skips(cells.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const auto& c = cells[i];
    const std::string& name = corpus.names[c.project];
    const Mode mode = config.modes[c.mode];
    const LearnerKind learner = config.learners[c.learner];
    const std::string where = fmt::format("{} {} {} {}", name, to_string(mode), to_string(granularity), to_string(learner));
    Dataset d;
    SplitPlan plan;
    try {
      d = prepared(corpus.projects[c.project], mode, granularity);
      plan = plan_for(d, config, c.project);
    } catch (const Error& e) {
      cell_skips[i].push_back(where + ": " + e.what());
      return;
    }
    for (std::size_t k = 0; k < plan.pairs.size(); ++k) {
      const auto& pair = plan.pairs[k];
      try {
        const auto spec = spec_for(learner, derive_seed(config.seed, {c.project, c.mode, c.learner, k}));
        const auto smote_seed = derive_seed(config.seed, {c.project, c.mode, k, 0x5307eULL});
        results[i].push_back({name, to_string(mode), to_string(granularity), to_string(d.level),
                              to_string(learner), pair.label,
                              run_fold(d, pair, spec, config.smote, smote_seed)});
      } catch (const Error& e) {
        cell_skips[i].push_back(where + " fold " + pair.label + ": " + e.what());
      }
    }
  });
  std::vector<ResultRow> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.insert(out.end(), results[i].begin(), results[i].end());
    if (skips) skips->insert(skips->end(), cell_skips[i].begin(), cell_skips[i].end());
  }
  return out;
}

std::vector<VarianceRow> variance_report(const std::vector<ResultRow>& rows,
                                         const std::vector<std::string>& measures) {
  // (learner, mode) -> project -> measure values
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::map<std::string, std::vector<double>>>> by;
  for (const auto& r : rows)
    for (const auto& m : measures)
      if (auto v = r.result.get(m)) by[{r.learner, r.mode}][r.project][m].push_back(*v);
  std::vector<VarianceRow> out;
  for (const auto& [key, projects] : by)
    for (const auto& m : measures) {
      std::vector<double> medians;
      for (const auto& [proj, values] : projects)
        if (auto it = values.find(m); it != values.end() && !it->second.empty()) medians.push_back(median(it->second));
      if (medians.empty()) continue;
      out.push_back({key.first, key.second, m, median(medians), iqr(medians), medians.size()});
    }
  return out;
}

void write_variance_csv(std::ostream& out, const std::vector<VarianceRow>& rows) {
  out << "learner,mode,measure,median,iqr,projects\n";
  for (const auto& r : rows)
    csv::write_row(out, {r.learner, r.mode, r.measure, csv::format_number(r.median),
                         csv::format_number(r.iqr), std::to_string(r.projects)});
}

std::vector<RankGroup> rank_groups(const std::vector<ResultRow>& rows, const std::string& measure) {
  std::set<std::string> granularities, projects;
  for (const auto& r : rows) {
    granularities.insert(r.granularity);
    projects.insert(r.project);
  }
  const bool per_project = projects.size() >= 2;
  std::map<std::string, std::map<std::string, std::vector<double>>> by;
  for (const auto& r : rows) {
    auto v = r.result.get(measure);
    if (!v) continue;
    std::string group = r.learner + "/" + r.mode;
    if (granularities.size() > 1) group += "/" + r.granularity;
    by[group][per_project ? r.project : std::string{}].push_back(*v);
  }
  std::vector<RankGroup> out;
  for (auto& [name, per] : by) {
    RankGroup g{name, {}};
    for (auto& [proj, values] : per) {
      if (per_project) g.values.push_back(median(values));
      else g.values.insert(g.values.end(), values.begin(), values.end());
    }
    out.push_back(std::move(g));
  }
  return out;
}

void write_rank_table(std::ostream& out, const std::vector<RankTableRow>& rows) {
  out << "scope,group,rank,median,a12_vs_next,p\n";
  auto cell = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string{}; };
  for (const auto& r : rows)
    csv::write_row(out, {r.scope, r.entry.name, std::to_string(r.entry.rank),
                         csv::format_number(r.entry.median), cell(r.entry.a12_vs_next), cell(r.entry.p)});
}

std::vector<RankTableRow> rank_by_measure(const std::vector<ResultRow>& rows,
                                          const std::vector<std::string>& measures,
                                          std::uint64_t seed) {
  std::vector<RankTableRow> out;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto groups = rank_groups(rows, measures[i]);
    if (groups.empty()) continue;
    ScottKnottOptions opt;
    opt.higher_is_better = higher_is_better(measures[i]);
    for (auto& e : scott_knott(groups, derive_seed(seed, {0x5cULL, i}), opt)) out.push_back({measures[i], std::move(e)});
  }
  return out;
}

std::vector<ResultRow> rq3_granularity(const Corpus& corpus, const ExperimentConfig& config,
                                       std::vector<std::string>* skips) {
  Corpus kept;
  for (std::size_t p = 0; p < corpus.projects.size(); ++p) {
    std::set<std::string> packages;
    for (const auto& m : corpus.projects[p].meta) packages.insert(package_of(m.unit));
    if (packages.size() < 2) {
      if (skips) skips->push_back(corpus.names[p] + ": single package, no package structure");
      continue;
    }
    kept.names.push_back(corpus.names[p]);
    kept.projects.push_back(corpus.projects[p]);
  }
  auto rows = rq_performance(kept, config, Granularity::file, skips);
  auto pkg = rq_performance(kept, config, Granularity::package, skips);
  rows.insert(rows.end(), pkg.begin(), pkg.end());
  return rows;
}

std::vector<ResultRow> rq4_stability(const Corpus& corpus, const ExperimentConfig& config,
                                     std::vector<std::string>* skips) {
  ExperimentConfig c = config;
  c.split = SplitKind::release_based;
  return rq_performance(corpus, c, config.granularity, skips);
}

std::vector<RankTableRow> rq4_ranks(const std::vector<ResultRow>& rows,
                                    const std::vector<std::string>& measures, std::uint64_t seed) {
  // project -> highest release label, to name tests R-2, R-1, R
  std::map<std::string, int> last;
  for (const auto& r : rows) last[r.project] = std::max(last[r.project], std::stoi(r.fold.substr(1)));
  std::set<std::pair<std::string, std::string>> scopes;
  for (const auto& r : rows) scopes.insert({r.mode, r.learner});
  std::vector<RankTableRow> out;
  std::size_t k = 0;
  for (const auto& m : measures)
    for (const auto& [mode, learner] : scopes) {
      std::map<std::string, std::vector<double>> groups;
      for (const auto& r : rows) {
        if (r.mode != mode || r.learner != learner) continue;
        auto v = r.result.get(m);
        if (!v) continue;
        const int back = last[r.project] - std::stoi(r.fold.substr(1));
        groups[back == 0 ? "R" : fmt::format("R-{}", back)].push_back(*v);
      }
      std::vector<RankGroup> g;
      for (auto& [name, values] : groups) g.push_back({name, std::move(values)});
      if (g.empty()) continue;
      ScottKnottOptions opt;
      opt.higher_is_better = higher_is_better(m);
      for (auto& e : scott_knott(g, derive_seed(seed, {0x44ULL, k++}), opt))
        out.push_back({fmt::format("{} {} {}", m, mode, learner), std::move(e)});
    }
  return out;
}

namespace {

std::optional<double> vector_rho(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> x, y;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (!std::isnan(a[j]) && !std::isnan(b[j])) {
      x.push_back(a[j]);
      y.push_back(b[j]);
    }
  if (x.size() < 2) return std::nullopt;
  return spearman(x, y);
}

void stasis_pairs(const std::string& config, const std::string& project, const Dataset& d,
                  std::vector<StasisRow>& rows, StasisSummary& summary) {
  std::map<std::string, std::vector<std::size_t>> by_unit;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto& v = by_unit[d.meta[i].unit];
    if (v.empty()) order.push_back(d.meta[i].unit);
    v.push_back(i);
  }
  for (const auto& unit : order) {
    const auto& idx = by_unit[unit];
    if (idx.size() < 2) {
      ++summary.skipped_units;
      continue;
    }
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      auto rho = vector_rho(d.X[idx[k]], d.X[idx[k + 1]]);
      if (!rho) {
        ++summary.undefined_pairs;
        continue;
      }
      ++summary.pairs;
      rows.push_back({config, project, unit, *rho});
    }
  }
}

}  // namespace

std::vector<StasisRow> rq5_stasis(const Corpus& corpus, std::vector<StasisSummary>* summary) {
  const std::vector<std::string> configs = {"P_R", "C_R", "P_J", "C_J", "P_P_J"};
  std::vector<StasisSummary> sums;
  for (const auto& c : configs) sums.push_back({c, 0, 0, 0, std::nullopt});
  std::vector<StasisRow> rows;
  for (std::size_t p = 0; p < corpus.projects.size(); ++p) {
    const auto& data = corpus.projects[p];
    const auto& name = corpus.names[p];
    std::optional<Dataset> proc, prod;
    try {
      proc = select_mode(data, Mode::process);
    } catch (const DataError&) {
    }
    try {
      prod = select_mode(data, Mode::product);
    } catch (const DataError&) {
    }
    if (proc) {
      stasis_pairs("P_R", name, to_release_level(*proc), rows, sums[0]);
      stasis_pairs("P_J", name, *proc, rows, sums[2]);
      stasis_pairs("P_P_J", name, aggregate_packages(*proc), rows, sums[4]);
    }
    if (prod) {
      stasis_pairs("C_R", name, to_release_level(*prod), rows, sums[1]);
      stasis_pairs("C_J", name, *prod, rows, sums[3]);
    }
  }
  for (auto& s : sums) {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.config == s.config) v.push_back(r.rho);
    if (!v.empty()) s.median_rho = median(v);
  }
  if (summary) *summary = sums;
  return rows;
}

namespace {

struct PeriodModel {
  Dataset train, test;  // preprocessed
  std::vector<double> train_scores, test_scores;
  std::vector<int> test_pred;
};

PeriodModel fit_periods(const Dataset& d, const SplitPlan& plan, const ModelSpec& spec,
                        bool use_smote, std::uint64_t smote_seed) {
  std::vector<std::size_t> test;
  for (const auto& pr : plan.pairs) test.insert(test.end(), pr.test.begin(), pr.test.end());
  PeriodModel pm;
  std::tie(pm.train, pm.test) = preprocess(d.subset(plan.pairs.front().train), d.subset(test));
  if (pm.train.feature_names.empty()) throw FitError("no feature varies in the training data");
  const Model model = fit(spec, use_smote ? smote(pm.train, {5, smote_seed}) : pm.train);
  pm.train_scores = score_all(model, pm.train.X);
  pm.test_scores = score_all(model, pm.test.X);
  pm.test_pred = predict_all(model, pm.test.X);
  return pm;
}

}  // namespace

std::vector<StagnationRow> rq6_stagnation(const Corpus& corpus, const ExperimentConfig& config,
                                          std::vector<std::string>* skips) {
  std::vector<StagnationRow> out;
  for (std::size_t m = 0; m < config.modes.size(); ++m) {
    const Mode mode = config.modes[m];
    std::vector<double> before, after;
    for (std::size_t p = 0; p < corpus.projects.size(); ++p) {
      try {
        const Dataset d = select_mode(corpus.projects[p], mode);
        const auto plan = release_splits(d);
        const auto pm = fit_periods(d, plan, spec_for(config.rq6_learner, derive_seed(config.seed, {6, p, m})),
                                    config.smote, derive_seed(config.seed, {6, p, m, 0x5307eULL}));
        std::map<std::string, std::pair<double, int>> train_val, test_val;
        for (std::size_t i = 0; i < pm.train.size(); ++i) {
          auto& t = train_val[pm.train.meta[i].unit];
          t.first += config.rq6_use_density ? pm.train.y[i] : pm.train_scores[i];
          t.second += 1;
        }
        for (std::size_t i = 0; i < pm.test.size(); ++i) {
          auto& t = test_val[pm.test.meta[i].unit];
          t.first += pm.test_scores[i];
          t.second += 1;
        }
        for (const auto& [unit, tv] : train_val)
          if (auto it = test_val.find(unit); it != test_val.end()) {
            before.push_back(tv.first / tv.second);
            after.push_back(it->second.first / it->second.second);
          }
      } catch (const Error& e) {
        if (skips) skips->push_back(fmt::format("rq6 {} {}: {}", corpus.names[p], to_string(mode), e.what()));
      }
    }
    StagnationRow row{to_string(mode), config.rq6_use_density ? "density" : "score", std::nullopt,
                      std::nullopt, before.size(), {}};
    if (before.size() < 2) {
      row.flags = "rho:fewer-than-2-shared-files";
    } else if (auto rho = spearman(before, after)) {
      row.rho = rho;
      row.p = spearman_p(*rho, before.size());
    } else {
      row.flags = "rho:zero-rank-variance";
    }
    out.push_back(std::move(row));
  }
  return out;
}

FilePartition partition_files(const Dataset& data, const SplitPair& pair) {
  std::map<std::string, bool> train_def, test_def;
  for (auto i : pair.train) train_def[data.meta[i].unit] |= data.y[i] != 0;
  std::vector<std::string> order;
  for (auto i : pair.test) {
    auto [it, fresh] = test_def.emplace(data.meta[i].unit, false);
    if (fresh) order.push_back(data.meta[i].unit);
    it->second = it->second || data.y[i] != 0;
  }
  FilePartition part;
  for (const auto& unit : order) {
    const bool in_train = train_def.count(unit) && train_def[unit];
    const bool in_test = test_def[unit];
    if (in_train && in_test) part.recurrent.push_back(unit);
    else if (in_train) part.train_only.push_back(unit);
    else if (in_test) part.test_only.push_back(unit);
  }
  return part;
}

std::vector<RecurrenceRow> rq7_recurrence(const Corpus& corpus, const ExperimentConfig& config,
                                          std::vector<std::string>* skips) {
  std::vector<RecurrenceRow> out;
  for (std::size_t m = 0; m < config.modes.size(); ++m) {
    const Mode mode = config.modes[m];
    std::size_t n[3] = {0, 0, 0}, hit[3] = {0, 0, 0};
    for (std::size_t p = 0; p < corpus.projects.size(); ++p) {
      try {
        const Dataset d = select_mode(corpus.projects[p], mode);
        const auto plan = release_splits(d);
        SplitPair merged{"test", plan.pairs.front().train, {}};
        for (const auto& pr : plan.pairs) merged.test.insert(merged.test.end(), pr.test.begin(), pr.test.end());
        const auto part = partition_files(d, merged);
        const auto pm = fit_periods(d, plan, spec_for(config.rq6_learner, derive_seed(config.seed, {7, p, m})),
                                    config.smote, derive_seed(config.seed, {7, p, m, 0x5307eULL}));
        std::map<std::string, bool> flagged;
        for (std::size_t i = 0; i < pm.test.size(); ++i) flagged[pm.test.meta[i].unit] |= pm.test_pred[i] != 0;
        const std::vector<std::string>* sets[3] = {&part.recurrent, &part.train_only, &part.test_only};
        for (int s = 0; s < 3; ++s)
          for (const auto& u : *sets[s]) {
            ++n[s];
            if (flagged[u]) ++hit[s];
          }
      } catch (const Error& e) {
        if (skips) skips->push_back(fmt::format("rq7 {} {}: {}", corpus.names[p], to_string(mode), e.what()));
      }
    }
    const char* names[3] = {"recurrent", "train_only", "test_only"};
    const char* measures[3] = {"recall", "pf", "recall"};
    for (int s = 0; s < 3; ++s) {
      RecurrenceRow r{to_string(mode), names[s], measures[s], n[s], std::nullopt};
      if (n[s]) r.value = static_cast<double>(hit[s]) / static_cast<double>(n[s]);
      out.push_back(std::move(r));
    }
  }
  return out;
}

Dataset pool_datasets(const std::vector<const Dataset*>& parts) {
  if (parts.empty()) throw DataError("nothing to pool");
  Dataset d = *parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const Dataset& p = *parts[k];
    if (p.feature_names != d.feature_names) throw DataError("pooled datasets differ in features");
    d.X.insert(d.X.end(), p.X.begin(), p.X.end());
    d.y.insert(d.y.end(), p.y.begin(), p.y.end());
    d.effort.insert(d.effort.end(), p.effort.begin(), p.effort.end());
    d.meta.insert(d.meta.end(), p.meta.begin(), p.meta.end());
  }
  return d;
}

namespace {

/// Importance per metric of `metrics` (0 for dropped features), then ranks (1 = most important).
std::vector<double> importance_ranks(const Dataset& pooled, const std::vector<std::string>& metrics,
                                     const ModelSpec& spec) {
  auto [train, unused] = preprocess(pooled, pooled.subset({}));
  (void)unused;
  if (train.feature_names.empty()) throw FitError("no feature varies in the pooled data");
  const Model model = fit(spec, train);
  const auto imp = feature_importance(model);
  std::vector<double> full(metrics.size(), 0.0);
  for (std::size_t j = 0; j < train.feature_names.size(); ++j) {
    auto it = std::find(metrics.begin(), metrics.end(), train.feature_names[j]);
    full[static_cast<std::size_t>(it - metrics.begin())] = imp[j];
  }
  for (auto& v : full) v = -v;
  return average_ranks(full);
}

}  // namespace

ImportanceReport rq8_importance(const Corpus& corpus, const ExperimentConfig& config) {
  const auto s = static_cast<std::size_t>(config.small_size);
  if (corpus.projects.size() < s)
    throw ConfigError(fmt::format("corpus has {} projects, fewer than the small-sample size {}",
                                  corpus.projects.size(), s));
  std::vector<Dataset> sel;
  for (const auto& d : corpus.projects) sel.push_back(select_mode(d, config.rq8_mode));
  std::vector<const Dataset*> all;
  for (const auto& d : sel) all.push_back(&d);
  ImportanceReport rep;
  rep.metrics = sel.front().feature_names;

  rep.large_rank = importance_ranks(pool_datasets(all), rep.metrics,
                                    spec_for(LearnerKind::rf, derive_seed(config.seed, {8, 0})));

  std::vector<std::vector<double>> small(rep.metrics.size());
  Rng rng(derive_seed(config.seed, {8, 1}));
  for (int k = 0; k < config.small_samples; ++k) {
    std::vector<std::size_t> idx(sel.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < s; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s));
    std::vector<const Dataset*> parts;
    for (std::size_t i = 0; i < s; ++i) parts.push_back(&sel[idx[i]]);
    const auto ranks = importance_ranks(pool_datasets(parts), rep.metrics,
                                        spec_for(LearnerKind::lr, derive_seed(config.seed, {8, 2, static_cast<std::uint64_t>(k)})));
    for (std::size_t j = 0; j < ranks.size(); ++j) small[j].push_back(ranks[j]);
  }
  for (auto& v : small) rep.small_rank.push_back(median(v));
  if (rep.metrics.size() >= 2) {
    rep.rho = spearman(rep.large_rank, rep.small_rank);
    if (rep.rho) rep.p = spearman_p(*rep.rho, rep.metrics.size());
  }
  return rep;
}

namespace {

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  fn(out);
  if (!out) throw Error("write failed for " + path.string());
}

std::string opt_cell(const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string{}; }

}  // namespace

ExperimentOutputs run_experiment(const ExperimentConfig& config, int rq, const std::string& out_dir,
                                 bool* reused) {
  if (rq < 1 || rq > 8) throw ConfigError("rq must be between 1 and 8");
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  RunManifest manifest;
  manifest.tool_version = tool_version();
  manifest.stage = fmt::format("experiment-rq{}", rq);
  manifest.config_hash = sha256_hex(config.canonical());
  manifest.seed = config.seed;
  for (const auto& p : config.projects) manifest.inputs.push_back({fs::path(p).filename().string(), sha256_file(p)});

  if (manifest_is_current(out_dir, "manifest.json", manifest)) {
    if (reused) *reused = true;
    const auto old = read_manifest((dir / "manifest.json").string());
    ExperimentOutputs o;
    for (const auto& f : old.outputs) o.files.push_back(f.name);
    o.skips = old.skips;
    return o;
  }
  if (reused) *reused = false;

  const Corpus corpus = load_corpus(config);
  ExperimentOutputs o;
  switch (rq) {
    case 1:
    case 2: {
      const auto rows = rq_performance(corpus, config, config.granularity, &o.skips);
      write_file(dir / "results.csv", [&](std::ostream& out) { write_results_csv(out, rows); });
      write_file(dir / "ranks.csv", [&](std::ostream& out) {
        write_rank_table(out, rank_by_measure(rows, config.measures, config.seed));
      });
      write_file(dir / "rq2_variance.csv", [&](std::ostream& out) {
        write_variance_csv(out, variance_report(rows, config.measures));
      });
      o.files = {"results.csv", "ranks.csv", "rq2_variance.csv"};
      break;
    }
    case 3: {
      const auto rows = rq3_granularity(corpus, config, &o.skips);
      write_file(dir / "rq3_results.csv", [&](std::ostream& out) { write_results_csv(out, rows); });
      write_file(dir / "rq3_ranks.csv", [&](std::ostream& out) {
        write_rank_table(out, rank_by_measure(rows, config.measures, config.seed));
      });
      o.files = {"rq3_results.csv", "rq3_ranks.csv"};
      break;
    }
    case 4: {
      const auto rows = rq4_stability(corpus, config, &o.skips);
      write_file(dir / "rq4_results.csv", [&](std::ostream& out) { write_results_csv(out, rows); });
      write_file(dir / "rq4_ranks.csv", [&](std::ostream& out) {
        write_rank_table(out, rq4_ranks(rows, config.measures, config.seed));
      });
      o.files = {"rq4_results.csv", "rq4_ranks.csv"};
      break;
    }
    case 5: {
      std::vector<StasisSummary> summary;
      const auto rows = rq5_stasis(corpus, &summary);
      write_file(dir / "rq5_stasis.csv", [&](std::ostream& out) {
        out << "config,project,unit,rho\n";
        for (const auto& r : rows) csv::write_row(out, {r.config, r.project, r.unit, csv::format_number(r.rho)});
      });
      write_file(dir / "rq5_summary.csv", [&](std::ostream& out) {
        out << "config,pairs,skipped_units,undefined_pairs,median_rho\n";
        for (const auto& s : summary)
          csv::write_row(out, {s.config, std::to_string(s.pairs), std::to_string(s.skipped_units),
                               std::to_string(s.undefined_pairs), opt_cell(s.median_rho)});
      });
      o.files = {"rq5_stasis.csv", "rq5_summary.csv"};
      break;
    }
    case 6: {
      const auto rows = rq6_stagnation(corpus, config, &o.skips);
      write_file(dir / "rq6_stagnation.csv", [&](std::ostream& out) {
        out << "mode,reading,rho,p,files,flags\n";
        for (const auto& r : rows)
          csv::write_row(out, {r.mode, r.reading, opt_cell(r.rho), opt_cell(r.p), std::to_string(r.files), r.flags});
      });
      o.files = {"rq6_stagnation.csv"};
      break;
    }
    case 7: {
      const auto rows = rq7_recurrence(corpus, config, &o.skips);
      write_file(dir / "rq7_recurrence.csv", [&](std::ostream& out) {
        out << "mode,partition,measure,files,value,flags\n";
        for (const auto& r : rows)
          csv::write_row(out, {r.mode, r.partition, r.measure, std::to_string(r.files), opt_cell(r.value),
                               r.files ? "" : "empty"});
      });
      o.files = {"rq7_recurrence.csv"};
      break;
    }
    case 8: {
      const auto rep = rq8_importance(corpus, config);
      write_file(dir / "rq8_importance.csv", [&](std::ostream& out) {
        out << "metric,large_rank,small_rank\n";
        for (std::size_t j = 0; j < rep.metrics.size(); ++j)
          csv::write_row(out, {rep.metrics[j], csv::format_number(rep.large_rank[j]),
                               csv::format_number(rep.small_rank[j])});
      });
      write_file(dir / "rq8_summary.csv", [&](std::ostream& out) {
        out << "rho,p,metrics,small_samples,small_size\n";
        csv::write_row(out, {opt_cell(rep.rho), opt_cell(rep.p), std::to_string(rep.metrics.size()),
                             std::to_string(config.small_samples), std::to_string(config.small_size)});
      });
      o.files = {"rq8_importance.csv", "rq8_summary.csv"};
      break;
    }
  }
  manifest.outputs = digest_outputs(out_dir, o.files);
  manifest.skips = o.skips;
  write_manifest((dir / "manifest.json").string(), manifest);
  return o;
}

}  // namespace defectlab
