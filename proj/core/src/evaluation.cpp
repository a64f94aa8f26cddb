#include "defectlab/evaluation.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace defectlab {

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& y) {
  if (pred.size() != y.size() || y.empty()) throw DataError("prediction and label vectors must be non-empty and equal length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i]) (pred[i] ? cm.tp : cm.fn) += 1;
    else (pred[i] ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

namespace {

std::optional<double> ratio(long long num, long long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> recall(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fn); }
std::optional<double> precision(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fp); }
std::optional<double> pf(const ConfusionMatrix& cm) { return ratio(cm.fp, cm.fp + cm.tn); }

std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& y) {
  if (scores.size() != y.size()) throw DataError("score and label vectors differ in length");
  const auto n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (y[idx[k]]) {
        pos += 1;
        rank_sum += avg;
      }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

std::vector<std::size_t> inspection_order(const std::vector<double>& scores,
                                          const std::vector<double>& effort) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (!effort.empty() && effort[a] != effort[b]) return effort[a] < effort[b];
    return a < b;
  });
  return idx;
}

std::optional<double> popt20(const std::vector<double>& scores, const std::vector<int>& y,
                             const std::vector<double>& effort) {
  if (scores.size() != y.size() || effort.size() != y.size())
    throw DataError("score, label and effort vectors differ in length");
  const double total = std::accumulate(effort.begin(), effort.end(), 0.0);
  const auto defects = std::count(y.begin(), y.end(), 1);
  if (defects == 0 || !(total > 0)) return std::nullopt;
  double cum = 0;
  long long found = 0;
  for (auto i : inspection_order(scores, effort)) {
    const double before = cum;
    cum += effort[i];
    if (5 * before < total || 5 * cum <= total) {
      if (y[i]) ++found;
    } else {
      break;
    }
  }
  return static_cast<double>(found) / static_cast<double>(defects);
}

std::optional<double> ifa(const std::vector<double>& scores, const std::vector<int>& y,
                          const std::vector<double>& effort) {
  if (scores.size() != y.size() || (!effort.empty() && effort.size() != y.size()))
    throw DataError("score, label and effort vectors differ in length");
  double false_alarms = 0;
  for (auto i : inspection_order(scores, effort)) {
    if (y[i]) return false_alarms;
    false_alarms += 1;
  }
  return std::nullopt;
}

std::optional<double> EvalResult::get(const std::string& measure) const {
  if (measure == "recall") return recall;
  if (measure == "precision") return precision;
  if (measure == "pf") return pf;
  if (measure == "auc") return auc;
  if (measure == "popt20") return popt20;
  if (measure == "ifa") return ifa;
  throw ConfigError("unknown measure '" + measure + "'");
}

std::string EvalResult::flags() const {
  std::vector<std::string> out;
  if (!recall) out.emplace_back("recall:no-positives");
  if (!precision) out.emplace_back("precision:no-predicted-positives");
  if (!pf) out.emplace_back("pf:no-negatives");
  if (!auc) out.emplace_back(constant_scores ? "auc:constant-scores" : "auc:single-class");
  if (!popt20) out.emplace_back("popt20:no-defects");
  if (!ifa) out.emplace_back("ifa:no-defects");
  std::string s;
  for (const auto& f : out) s += (s.empty() ? "" : ";") + f;
  return s;
}

EvalResult evaluate(const std::vector<double>& scores, const std::vector<int>& pred,
                    const std::vector<int>& y, const std::vector<double>& effort) {
  EvalResult r;
  const auto cm = confusion(pred, y);
  r.recall = recall(cm);
  r.precision = precision(cm);
  r.pf = pf(cm);
  r.constant_scores =
      std::adjacent_find(scores.begin(), scores.end(), std::not_equal_to<>()) == scores.end();
  r.auc = r.constant_scores ? std::nullopt : auc(scores, y);
  r.popt20 = popt20(scores, y, effort);
  r.ifa = ifa(scores, y, effort);
  return r;
}

const std::vector<std::string>& measure_names() {
  static const std::vector<std::string> names = {"recall", "precision", "pf", "auc", "popt20", "ifa"};
  return names;
}

bool higher_is_better(const std::string& measure) { return measure != "pf" && measure != "ifa"; }

void write_results_header(std::ostream& out) {
  out << "project,mode,granularity,level,learner,fold_or_release,recall,precision,pf,auc,popt20,ifa,flags\n";
}

void write_result_row(std::ostream& out, const ResultRow& row) {
  auto cell = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string{}; };
  const auto& r = row.result;
  csv::write_row(out, {row.project, row.mode, row.granularity, row.level, row.learner, row.fold,
                       cell(r.recall), cell(r.precision), cell(r.pf), cell(r.auc), cell(r.popt20),
                       cell(r.ifa), r.flags()});
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  write_results_header(out);
  for (const auto& r : rows) write_result_row(out, r);
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  const auto t = csv::read(in);
  const std::vector<std::string> key = {"project", "mode", "granularity", "level", "learner",
                                        "fold_or_release"};
  std::vector<std::size_t> kc, mc;
  for (const auto& k : key) kc.push_back(t.require(k));
  for (const auto& m : measure_names()) mc.push_back(t.require(m));
  const auto flags = t.column("flags");
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    ResultRow r{row[kc[0]], row[kc[1]], row[kc[2]], row[kc[3]], row[kc[4]], row[kc[5]], {}};
    std::optional<double>* fields[] = {&r.result.recall, &r.result.precision, &r.result.pf,
                                       &r.result.auc,    &r.result.popt20,    &r.result.ifa};
    for (std::size_t k = 0; k < mc.size(); ++k)
      if (!row[mc[k]].empty()) *fields[k] = csv::parse_double(row[mc[k]], i + 2);
    if (flags) r.result.constant_scores = row[*flags].find("auc:constant-scores") != std::string::npos;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> load_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open results " + path);
  return read_results_csv(in);
}

}  // namespace defectlab
