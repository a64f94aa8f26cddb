#include "defectlab/stats.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/numeric.hpp"
#include "defectlab/random.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace defectlab {

double a12(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.empty() || y.empty()) throw StatsError("a12 needs two non-empty samples");
  // Binary search over sorted copies keeps this O((n+m) log m).
  std::vector<double> xs = x, ys = y;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double wins = 0;
  for (double v : xs) {
    const auto lo = std::lower_bound(ys.begin(), ys.end(), v);
    const auto hi = std::upper_bound(lo, ys.end(), v);
    wins += static_cast<double>(lo - ys.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
}

BootstrapResult bootstrap_sig(const std::vector<double>& x, const std::vector<double>& y,
                              std::uint64_t seed, int B, double alpha) {
  if (x.empty() || y.empty()) throw StatsError("bootstrap needs two non-empty samples");
  if (B < 1) throw StatsError("bootstrap needs B >= 1");
  const double mx = mean(x), my = mean(y);
  const double observed = std::abs(mx - my);
  BootstrapResult r;
  if (observed == 0) return r;
  std::vector<double> all = x;
  all.insert(all.end(), y.begin(), y.end());
  const double pooled = mean(all);
  std::vector<double> xc(x.size()), yc(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) xc[i] = x[i] - mx + pooled;
  for (std::size_t i = 0; i < y.size(); ++i) yc[i] = y[i] - my + pooled;
  Rng rng(seed);
  int extreme = 0;
  for (int b = 0; b < B; ++b) {
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xc.size(); ++i) sx += xc[rng.index(xc.size())];
    for (std::size_t i = 0; i < yc.size(); ++i) sy += yc[rng.index(yc.size())];
    const double d = std::abs(sx / static_cast<double>(xc.size()) - sy / static_cast<double>(yc.size()));
    // Centered resamples differ from the observed gap only by rounding when it is tiny.
    if (d >= observed - 1e-12 * std::max(1.0, observed)) ++extreme;
  }
  r.p = static_cast<double>(extreme) / static_cast<double>(B);
  r.significant = r.p < alpha;
  return r;
}

std::vector<RankGroup> sort_groups(std::vector<RankGroup> groups, bool higher_is_better) {
  for (const auto& g : groups)
    if (g.values.empty()) throw StatsError("group '" + g.name + "' has no values");
  std::vector<std::pair<double, RankGroup>> keyed;
  for (auto& g : groups) {
    const double m = median(g.values);
    keyed.emplace_back(higher_is_better ? -m : m, std::move(g));
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second.name < b.second.name;
  });
  std::vector<RankGroup> out;
  for (auto& [k, g] : keyed) out.push_back(std::move(g));
  return out;
}

namespace {

std::vector<double> pool(const std::vector<RankGroup>& g, std::size_t lo, std::size_t hi) {
  std::vector<double> v;
  for (std::size_t i = lo; i < hi; ++i) v.insert(v.end(), g[i].values.begin(), g[i].values.end());
  return v;
}

struct Ranker {
  const std::vector<RankGroup>& sorted;
  std::uint64_t seed;
  const ScottKnottOptions& opt;
  std::vector<int>& ranks;
  std::vector<SplitStep>* trace;

  // Returns the number of ranks used by [lo, hi).
  int run(std::size_t lo, std::size_t hi, int first_rank) {
    if (hi - lo < 2) {
      for (std::size_t i = lo; i < hi; ++i) ranks[i] = first_rank;
      return 1;
    }
    std::size_t cut = lo + 1;
    double best = expected_delta(sorted, lo, cut, hi);
    for (std::size_t c = lo + 2; c < hi; ++c) {
      const double d = expected_delta(sorted, lo, c, hi);
      if (d > best) {
        best = d;
        cut = c;
      }
    }
    const auto left = pool(sorted, lo, cut), right = pool(sorted, cut, hi);
    const auto boot = bootstrap_sig(left, right, derive_seed(seed, {lo, hi}), opt.bootstrap, opt.alpha);
    const double effect = a12(left, right);
    const bool large = std::max(effect, 1.0 - effect) >= opt.a12_threshold;
    const bool accepted = best > 0 && boot.significant && large;
    if (trace) trace->push_back({lo, hi, cut, best, accepted});
    if (!accepted) {
      for (std::size_t i = lo; i < hi; ++i) ranks[i] = first_rank;
      return 1;
    }
    const int used = run(lo, cut, first_rank);
    return used + run(cut, hi, first_rank + used);
  }
};

}  // namespace

double expected_delta(const std::vector<RankGroup>& sorted, std::size_t lo, std::size_t cut,
                      std::size_t hi) {
  const auto l = pool(sorted, lo, hi), m = pool(sorted, lo, cut), n = pool(sorted, cut, hi);
  const double ls = static_cast<double>(l.size());
  const double lm = mean(l), mm = mean(m), nm = mean(n);
  return static_cast<double>(m.size()) / ls * (mm - lm) * (mm - lm) +
         static_cast<double>(n.size()) / ls * (nm - lm) * (nm - lm);
}

std::vector<RankEntry> scott_knott(const std::vector<RankGroup>& groups, std::uint64_t seed,
                                   const ScottKnottOptions& options, std::vector<SplitStep>* trace) {
  if (groups.empty()) throw StatsError("no groups to rank");
  const auto sorted = sort_groups(groups, options.higher_is_better);
  std::vector<int> ranks(sorted.size(), 1);
  Ranker{sorted, seed, options, ranks, trace}.run(0, sorted.size(), 1);
  std::vector<RankEntry> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    RankEntry e;
    e.name = sorted[i].name;
    e.rank = ranks[i];
    e.median = median(sorted[i].values);
    if (i + 1 < sorted.size()) {
      e.a12_vs_next = a12(sorted[i].values, sorted[i + 1].values);
      e.p = bootstrap_sig(sorted[i].values, sorted[i + 1].values,
                          derive_seed(seed, {sorted.size() + i}), options.bootstrap, options.alpha).p;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg;
    i = j;
  }
  return r;
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw StatsError("spearman needs two equal-length vectors of size >= 2");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman_p(double rho, std::size_t n) {
  if (n < 3) return std::nullopt;
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

void write_rank_csv(std::ostream& out, const std::vector<RankEntry>& ranks) {
  out << "group,rank,median,a12_vs_next,p\n";
  auto cell = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string{}; };
  for (const auto& r : ranks)
    csv::write_row(out, {r.name, std::to_string(r.rank), csv::format_number(r.median),
                         cell(r.a12_vs_next), cell(r.p)});
}

}  // namespace defectlab
