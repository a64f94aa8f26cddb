#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace defectlab {

/// Vargha-Delaney A12: P(x > y) + P(x = y)/2.
double a12(const std::vector<double>& x, const std::vector<double>& y);

struct BootstrapResult {
  bool significant = false;
  double p = 1.0;
};

/// Two-sided bootstrap test of mean difference under the mean-centered null.
BootstrapResult bootstrap_sig(const std::vector<double>& x, const std::vector<double>& y,
                              std::uint64_t seed, int B = 1000, double alpha = 0.10);

struct RankGroup {
  std::string name;
  std::vector<double> values;
};

struct RankEntry {
  std::string name;
  int rank = 1;
  double median = 0;
  std::optional<double> a12_vs_next;  // against the next group in rank order
  std::optional<double> p;
};

struct ScottKnottOptions {
  bool higher_is_better = true;
  int bootstrap = 1000;
  double alpha = 0.10;
  double a12_threshold = 0.6;
};

/// One split decision: groups [lo, hi) of the sorted list, best boundary
/// `cut` (first group of the right part) and whether both gates passed.
struct SplitStep {
  std::size_t lo = 0, hi = 0, cut = 0;
  double delta = 0;
  bool accepted = false;
};

/// EΔ for splitting the pooled values of sorted groups [lo, hi) at `cut`.
double expected_delta(const std::vector<RankGroup>& sorted, std::size_t lo, std::size_t cut,
                      std::size_t hi);

/// Groups sorted best-first by median; ties broken by name.
std::vector<RankGroup> sort_groups(std::vector<RankGroup> groups, bool higher_is_better);

/// Ranks groups (1 = best) in best-first order. `trace` receives every split
/// considered.
std::vector<RankEntry> scott_knott(const std::vector<RankGroup>& groups, std::uint64_t seed,
                                   const ScottKnottOptions& options = {},
                                   std::vector<SplitStep>* trace = nullptr);

/// Pearson correlation of average ranks; nullopt when either side has no rank variance.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided p-value of rho over n pairs from the t distribution with n-2 dof.
std::optional<double> spearman_p(double rho, std::size_t n);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(const std::vector<double>& v);

void write_rank_csv(std::ostream& out, const std::vector<RankEntry>& ranks);

}  // namespace defectlab
