#include "defectlab/errors.hpp"
#include "defectlab/evaluation.hpp"
#include "defectlab/random.hpp"
#include "oracles/evaluation_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace defectlab;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> y;
  std::vector<double> effort;
};

// Coarse score and effort grids so ties are common.
Instance random_instance(Rng& rng, std::size_t max_n) {
  Instance in;
  const std::size_t n = 1 + rng.index(max_n);
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(rng.index(5)) / 4.0);
    in.y.push_back(rng.uniform() < 0.4);
    in.effort.push_back(static_cast<double>(rng.index(6)));
  }
  return in;
}

}  // namespace

TEST(Confusion, Examples) {
  ConfusionMatrix cm{3, 0, 10, 1};
  EXPECT_DOUBLE_EQ(*recall(cm), 0.75);
  EXPECT_DOUBLE_EQ(*pf(cm), 0.0);
  EXPECT_FALSE(precision(ConfusionMatrix{0, 0, 5, 2}).has_value());
  const auto c = confusion({1, 1, 0, 0, 1}, {1, 0, 0, 1, 1});
  EXPECT_EQ(c.tp, 2);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.tn, 1);
  EXPECT_EQ(c.fn, 1);
  EXPECT_EQ(c.total(), 5);
}

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(*auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*auc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(*auc({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}), 0.75);
  EXPECT_FALSE(auc({0.1, 0.2}, {1, 1}).has_value());
}

TEST(Auc, EqualsTrapezoidArea) {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(199);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? rng.uniform() : static_cast<double>(rng.index(7));
      y[i] = rng.uniform() < 0.3;
    }
    const auto a = auc(s, y);
    const auto b = oracle::trapezoid_auc(s, y);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) EXPECT_NEAR(*a, *b, 1e-12);
  }
}

TEST(Popt20, Examples) {
  // Top file defective, one more defect elsewhere, budget = exactly one file.
  EXPECT_DOUBLE_EQ(*popt20({0.9, 0.8, 0.7, 0.6, 0.5}, {1, 0, 0, 1, 0}, {20, 20, 20, 20, 20}), 0.5);
  EXPECT_DOUBLE_EQ(*popt20({0.9, 0.8, 0.7, 0.1}, {0, 0, 0, 1}, {10, 10, 10, 70}), 0.0);
  EXPECT_DOUBLE_EQ(*popt20({0.4}, {1}, {100}), 1.0);
  EXPECT_DOUBLE_EQ(*popt20({0.4, 0.1}, {1, 0}, {100, 0}), 1.0);
  EXPECT_FALSE(popt20({0.4, 0.1}, {0, 0}, {1, 1}).has_value());
}

TEST(Popt20, CrossingRowCounts) {
  // Budget 20 of 100: first row ends at 15, the second crosses it.
  EXPECT_DOUBLE_EQ(*popt20({0.9, 0.8, 0.1}, {0, 1, 1}, {15, 10, 75}), 0.5);
}

TEST(Popt20, TiesInspectSmallerFirst) {
  EXPECT_DOUBLE_EQ(*popt20({0.5, 0.5, 0.1}, {0, 1, 0}, {50, 10, 40}), 1.0);
  EXPECT_EQ(inspection_order({0.5, 0.5, 0.5, 0.9}, {3, 1, 1, 8}),
            (std::vector<std::size_t>{3, 1, 2, 0}));
}

TEST(Ifa, Examples) {
  EXPECT_EQ(*ifa({0.9, 0.5}, {1, 0}), 0);
  EXPECT_EQ(*ifa({0.9, 0.8, 0.7}, {0, 0, 1}), 2);
  EXPECT_FALSE(ifa({0.9, 0.8}, {0, 0}).has_value());
}

TEST(Oracles, BruteForceSmallInstances) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng, 12);
    EXPECT_EQ(auc(in.scores, in.y), oracle::auc(in.scores, in.y));
    EXPECT_EQ(popt20(in.scores, in.y, in.effort), oracle::popt20(in.scores, in.y, in.effort));
    EXPECT_EQ(ifa(in.scores, in.y, in.effort), oracle::ifa(in.scores, in.y, in.effort));
    EXPECT_EQ(ifa(in.scores, in.y), oracle::ifa(in.scores, in.y, {}));
  }
}

TEST(Oracles, MonotoneTransformInvariance) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = random_instance(rng, 30);
    std::vector<double> t;
    for (double s : in.scores) t.push_back(std::exp(3 * s) - 7);
    EXPECT_EQ(auc(in.scores, in.y), auc(t, in.y));
    EXPECT_EQ(popt20(in.scores, in.y, in.effort), popt20(t, in.y, in.effort));
    EXPECT_EQ(ifa(in.scores, in.y, in.effort), ifa(t, in.y, in.effort));
  }
}

TEST(Evaluate, ConstantScorerFlagsAuc) {
  const auto r = evaluate({0.5, 0.5, 0.5}, {1, 1, 1}, {1, 0, 0}, {3, 4, 5});
  EXPECT_TRUE(r.constant_scores);
  EXPECT_FALSE(r.auc.has_value());
  EXPECT_NE(r.flags().find("auc:constant-scores"), std::string::npos);
  EXPECT_DOUBLE_EQ(*r.recall, 1.0);
}

TEST(Evaluate, UniformScorerCentersOnHalf) {
  Rng rng(99);
  double sum = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> s(60);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
      s[i] = rng.uniform();
      y[i] = i % 4 == 0;
    }
    sum += *auc(s, y);
  }
  EXPECT_NEAR(sum / trials, 0.5, 0.02);
}

TEST(Evaluate, AllDefinedHasNoFlags) {
  const auto r = evaluate({0.9, 0.2, 0.6, 0.1}, {1, 0, 1, 0}, {1, 0, 0, 0}, {5, 5, 5, 5});
  EXPECT_EQ(r.flags(), "");
  EXPECT_DOUBLE_EQ(*r.get("recall"), 1.0);
  EXPECT_DOUBLE_EQ(*r.get("precision"), 0.5);
  EXPECT_DOUBLE_EQ(*r.get("auc"), 1.0);
  EXPECT_DOUBLE_EQ(*r.get("ifa"), 0.0);
  EXPECT_THROW(r.get("gscore"), ConfigError);
}

TEST(Evaluate, MeasureDirections) {
  EXPECT_EQ(measure_names().size(), 6u);
  EXPECT_TRUE(higher_is_better("auc"));
  EXPECT_FALSE(higher_is_better("pf"));
  EXPECT_FALSE(higher_is_better("ifa"));
}

TEST(ResultsCsv, RoundTrip) {
  ResultRow a{"p1", "P", "file", "jit", "rf", "3",
              evaluate({0.9, 0.2, 0.6, 0.1}, {1, 0, 1, 0}, {1, 0, 0, 0}, {5, 5, 5, 5})};
  ResultRow b{"p1", "C", "file", "jit", "lr", "4",
              evaluate({0.5, 0.5}, {0, 0}, {0, 0}, {1, 1})};
  std::stringstream buf;
  write_results_csv(buf, {a, b});
  const std::string first = buf.str();
  const auto back = read_results_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].learner, "rf");
  EXPECT_EQ(back[0].result.auc, a.result.auc);
  EXPECT_FALSE(back[1].result.auc.has_value());
  EXPECT_EQ(back[1].result.flags(), b.result.flags());
  std::stringstream again;
  write_results_csv(again, back);
  EXPECT_EQ(again.str(), first);
  EXPECT_EQ(first.substr(0, first.find('\n')),
            "project,mode,granularity,level,learner,fold_or_release,recall,precision,pf,auc,popt20,ifa,"
            "flags");
}
