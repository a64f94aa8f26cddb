#pragma once

// Reference Scott-Knott that tries every boundary of a segment by brute force
// and recomputes EΔ from raw value lists. The significance and effect gates
// are passed in so the oracle checks the split search, not the bootstrap.

#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Gate = std::function<bool(const std::vector<double>&, const std::vector<double>&,
                                std::size_t lo, std::size_t hi)>;

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline std::vector<double> concat(const std::vector<std::vector<double>>& groups, std::size_t lo,
                                  std::size_t hi) {
  std::vector<double> out;
  for (std::size_t i = lo; i < hi; ++i)
    for (double x : groups[i]) out.push_back(x);
  return out;
}

inline double delta(const std::vector<std::vector<double>>& groups, std::size_t lo, std::size_t cut,
                    std::size_t hi) {
  const auto l = concat(groups, lo, hi), m = concat(groups, lo, cut), n = concat(groups, cut, hi);
  const double mu = mean_of(l), a = mean_of(m) - mu, b = mean_of(n) - mu;
  return (static_cast<double>(m.size()) * a * a + static_cast<double>(n.size()) * b * b) /
         static_cast<double>(l.size());
}

struct Split {
  std::size_t cut;
  double delta;
};

// First boundary reaching the maximum EΔ over [lo, hi).
inline Split best_split(const std::vector<std::vector<double>>& groups, std::size_t lo,
                        std::size_t hi) {
  Split best{0, -1};
  for (std::size_t c = lo + 1; c < hi; ++c) {
    const double d = delta(groups, lo, c, hi);
    if (d > best.delta) best = {c, d};
  }
  return best;
}

// groups already sorted best-first. Returns the rank of each position.
inline std::vector<int> scott_knott(const std::vector<std::vector<double>>& groups, const Gate& gate) {
  std::vector<int> ranks(groups.size(), 1);
  std::function<int(std::size_t, std::size_t, int)> go = [&](std::size_t lo, std::size_t hi, int r) {
    auto flat = [&] {
      for (std::size_t i = lo; i < hi; ++i) ranks[i] = r;
      return 1;
    };
    if (hi - lo < 2) return flat();
    const auto s = best_split(groups, lo, hi);
    if (!(s.delta > 0) || !gate(concat(groups, lo, s.cut), concat(groups, s.cut, hi), lo, hi))
      return flat();
    const int used = go(lo, s.cut, r);
    return used + go(s.cut, hi, r + used);
  };
  go(0, groups.size(), 1);
  return ranks;
}

}  // namespace oracle
