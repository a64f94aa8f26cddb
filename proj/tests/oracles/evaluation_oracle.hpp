#pragma once

// Brute-force reference implementations of the ranking measures. They share
// no code with the library: the inspection order is built by repeated
// selection and the AUC by enumerating every (positive, negative) pair.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace oracle {

inline std::optional<double> auc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0;
  long long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) good += 1;
      else if (s[i] == s[j]) good += 0.5;
    }
  if (pairs == 0) return std::nullopt;
  return good / static_cast<double>(pairs);
}

// Area under the ROC polyline swept over every distinct score threshold.
inline std::optional<double> trapezoid_auc(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> cuts(s);
  std::sort(cuts.begin(), cuts.end(), std::greater<>());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double P = 0, N = 0;
  for (int v : y) (v ? P : N) += 1;
  if (P == 0 || N == 0) return std::nullopt;
  double area = 0, fpr0 = 0, tpr0 = 0;
  for (double c : cuts) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= c) (y[i] ? tp : fp) += 1;
    const double fpr = fp / N, tpr = tp / P;
    area += (fpr - fpr0) * (tpr + tpr0) / 2;
    fpr0 = fpr;
    tpr0 = tpr;
  }
  return area;
}

// Row a is inspected before row b.
inline bool before(const std::vector<double>& s, const std::vector<double>& e, std::size_t a,
                   std::size_t b) {
  if (s[a] != s[b]) return s[a] > s[b];
  if (!e.empty() && e[a] != e[b]) return e[a] < e[b];
  return a < b;
}

inline std::vector<std::size_t> order(const std::vector<double>& s, const std::vector<double>& e) {
  std::vector<bool> taken(s.size(), false);
  std::vector<std::size_t> out;
  for (std::size_t step = 0; step < s.size(); ++step) {
    std::size_t best = s.size();
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!taken[i] && (best == s.size() || before(s, e, i, best))) best = i;
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

inline std::optional<double> popt20(const std::vector<double>& s, const std::vector<int>& y,
                                    const std::vector<double>& e) {
  double total = 0;
  int defects = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    total += e[i];
    defects += y[i];
  }
  if (defects == 0 || total <= 0) return std::nullopt;
  // A row counts when it ends inside the budget or is the one that crosses it.
  double spent = 0;
  int found = 0;
  for (auto r : order(s, e)) {
    const double after = spent + e[r];
    const bool inside = 5 * after <= total;
    const bool crossing = 5 * spent < total && 5 * after > total;
    if (!inside && !crossing) break;
    found += y[r];
    spent = after;
  }
  return static_cast<double>(found) / defects;
}

inline std::optional<double> ifa(const std::vector<double>& s, const std::vector<int>& y,
                                 const std::vector<double>& e) {
  int clean = 0;
  for (auto r : order(s, e)) {
    if (y[r]) return clean;
    ++clean;
  }
  return std::nullopt;
}

}  // namespace oracle
