#pragma once

#include "defectlab/dataset.hpp"
#include "defectlab/evaluation.hpp"
#include "defectlab/learners.hpp"
#include "defectlab/stats.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace defectlab {

/// Flat `key = value` configuration. Lists are comma separated, '#' starts
/// a comment, relative dataset paths resolve against the config file.
///
///   projects      dataset CSVs (combined, file-level)          required unless projects_dir
///   projects_dir  directory whose *.csv files are the projects
///   modes         P,C,P+C                                      default P,C,P+C
///   learners      nb,lr,svm,rf                                 default nb,lr,svm,rf
///   split         cross_val | release                          default cross_val
///   repeats       M                                            default 5
///   folds         N                                            default 5
///   seed          unsigned integer                             required
///   measures      recall,precision,pf,auc,popt20,ifa           default all six
///   granularity   file | package                              default file
///   small_samples S                                            default 20
///   small_size    s                                            default 5
///   rq6_reading   score | density                              default score
///   rq6_learner   learner for RQ6/RQ7                          default rf
///   rq8_mode      feature set for RQ8                          default P+C
///   smote         on | off                                     default on
struct ExperimentConfig {
  std::vector<std::string> projects;
  std::vector<Mode> modes = {Mode::process, Mode::product, Mode::combined};
  std::vector<LearnerKind> learners = {LearnerKind::nb, LearnerKind::lr, LearnerKind::svm,
                                       LearnerKind::rf};
  SplitKind split = SplitKind::cross_val;
  int repeats = 5;
  int folds = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> measures = measure_names();
  Granularity granularity = Granularity::file;
  int small_samples = 20;
  int small_size = 5;
  bool rq6_use_density = false;
  LearnerKind rq6_learner = LearnerKind::rf;
  Mode rq8_mode = Mode::combined;
  bool smote = true;
  int jobs = 1;

  /// Canonical `key=value` text (sorted keys); hashed into run manifests.
  std::string canonical() const;
};

ExperimentConfig parse_config(std::istream& in, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

struct Corpus {
  std::vector<std::string> names;
  std::vector<Dataset> projects;
};

Corpus load_corpus(const ExperimentConfig& config);

/// Per (project, mode, learner, split pair): preprocess, SMOTE, fit, evaluate.
/// Failures land in `skips` and are never silently dropped.
std::vector<ResultRow> rq_performance(const Corpus& corpus, const ExperimentConfig& config,
                                      Granularity granularity, std::vector<std::string>* skips);

/// One fold: preprocess and optionally SMOTE the training part, fit, evaluate.
EvalResult run_fold(const Dataset& data, const SplitPair& pair, const ModelSpec& spec,
                    bool use_smote, std::uint64_t smote_seed);

struct VarianceRow {
  std::string learner, mode, measure;
  double median = 0, iqr = 0;
  std::size_t projects = 0;
};

/// Median and IQR of per-project medians per (learner, mode, measure).
std::vector<VarianceRow> variance_report(const std::vector<ResultRow>& rows,
                                         const std::vector<std::string>& measures);
void write_variance_csv(std::ostream& out, const std::vector<VarianceRow>& rows);

/// Groups results by `learner/mode` (plus granularity when it varies). A
/// group's values are per-project medians when at least two projects are
/// present, else the per-fold values.
std::vector<RankGroup> rank_groups(const std::vector<ResultRow>& rows, const std::string& measure);

struct RankTableRow {
  std::string scope;  // e.g. measure name, or "auc P rf"
  RankEntry entry;
};
void write_rank_table(std::ostream& out, const std::vector<RankTableRow>& rows);

std::vector<RankTableRow> rank_by_measure(const std::vector<ResultRow>& rows,
                                          const std::vector<std::string>& measures,
                                          std::uint64_t seed);

/// Runs file and package datasets of the same projects. Projects whose
/// files all live in one directory are skipped.
std::vector<ResultRow> rq3_granularity(const Corpus& corpus, const ExperimentConfig& config,
                                       std::vector<std::string>* skips);

/// Release-based evaluation on R-2, R-1, R; projects with R < 4 are skipped.
std::vector<ResultRow> rq4_stability(const Corpus& corpus, const ExperimentConfig& config,
                                     std::vector<std::string>* skips);
/// Scott-Knott across the three test releases per measure, mode and learner.
std::vector<RankTableRow> rq4_ranks(const std::vector<ResultRow>& rows,
                                    const std::vector<std::string>& measures, std::uint64_t seed);

struct StasisRow {
  std::string config;  // P_R, C_R, P_J, C_J, P_P_J
  std::string project;
  std::string unit;
  double rho = 0;
};

struct StasisSummary {
  std::string config;
  std::size_t pairs = 0;
  std::size_t skipped_units = 0;   // fewer than two appearances
  std::size_t undefined_pairs = 0; // zero rank variance
  std::optional<double> median_rho;
};

/// Spearman across the metric vector of each unit between consecutive check points.
std::vector<StasisRow> rq5_stasis(const Corpus& corpus, std::vector<StasisSummary>* summary);

struct StagnationRow {
  std::string mode;
  std::string reading;  // score | density
  std::optional<double> rho;
  std::optional<double> p;
  std::size_t files = 0;
  std::string flags;
};

/// Correlates each file's training-period value with its test-period score,
/// pooling shared files over all projects.
std::vector<StagnationRow> rq6_stagnation(const Corpus& corpus, const ExperimentConfig& config,
                                          std::vector<std::string>* skips);

struct RecurrenceRow {
  std::string mode;
  std::string partition;  // recurrent | train_only | test_only
  std::string measure;    // recall | pf
  std::size_t files = 0;
  std::optional<double> value;
};

/// Test files of `pair` split into recurrent, train-only and test-only sets.
struct FilePartition {
  std::vector<std::string> recurrent, train_only, test_only;
};
FilePartition partition_files(const Dataset& data, const SplitPair& pair);

std::vector<RecurrenceRow> rq7_recurrence(const Corpus& corpus, const ExperimentConfig& config,
                                          std::vector<std::string>* skips);

struct ImportanceReport {
  std::vector<std::string> metrics;
  std::vector<double> large_rank;
  std::vector<double> small_rank;
  std::optional<double> rho;
  std::optional<double> p;
};

ImportanceReport rq8_importance(const Corpus& corpus, const ExperimentConfig& config);

/// Concatenates datasets with identical feature lists.
Dataset pool_datasets(const std::vector<const Dataset*>& parts);

struct ExperimentOutputs {
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::string> skips;
};

/// Runs one research question and writes its CSVs plus manifest.json into
/// `out_dir`. Re-running with unchanged config and inputs recomputes nothing.
ExperimentOutputs run_experiment(const ExperimentConfig& config, int rq, const std::string& out_dir,
                                 bool* reused = nullptr);

}  // namespace defectlab
