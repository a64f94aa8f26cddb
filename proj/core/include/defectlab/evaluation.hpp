#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace defectlab {

struct ConfusionMatrix {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  long long total() const noexcept { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& y);

// nullopt marks a zero denominator.
std::optional<double> recall(const ConfusionMatrix& cm);
std::optional<double> precision(const ConfusionMatrix& cm);
std::optional<double> pf(const ConfusionMatrix& cm);

/// Rank-based ROC area: (concordant + ties/2) / (P * N). nullopt when a
/// class is absent.
std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& y);

/// Inspection order: score descending, then effort ascending, then row id.
std::vector<std::size_t> inspection_order(const std::vector<double>& scores,
                                          const std::vector<double>& effort);

/// Share of defective rows met within the first 20% of total effort; the row
/// that crosses the budget counts. nullopt without defects or effort.
std::optional<double> popt20(const std::vector<double>& scores, const std::vector<int>& y,
                             const std::vector<double>& effort);

/// Clean rows inspected before the first defective one. Ties in score are
/// broken by `effort` when given, else by row id.
std::optional<double> ifa(const std::vector<double>& scores, const std::vector<int>& y,
                          const std::vector<double>& effort = {});

struct EvalResult {
  std::optional<double> recall, precision, pf, auc, popt20, ifa;
  bool constant_scores = false;

  std::optional<double> get(const std::string& measure) const;
  /// ';'-joined reasons for undefined measures; empty when all are defined.
  std::string flags() const;
};

/// All six measures for one test set. A scorer that gives every row the same
/// value carries no ranking, so its AUC is flagged undefined.
EvalResult evaluate(const std::vector<double>& scores, const std::vector<int>& pred,
                    const std::vector<int>& y, const std::vector<double>& effort);

const std::vector<std::string>& measure_names();
/// True for measures where larger is better.
bool higher_is_better(const std::string& measure);

struct ResultRow {
  std::string project, mode, granularity, level, learner, fold;
  EvalResult result;
};

void write_results_header(std::ostream& out);
void write_result_row(std::ostream& out, const ResultRow& row);
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
std::vector<ResultRow> load_results_csv(const std::string& path);

}  // namespace defectlab
