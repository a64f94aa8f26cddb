#include "defectlab/errors.hpp"
#include "defectlab/evaluation.hpp"
#include "defectlab/learners.hpp"
#include "defectlab/numeric.hpp"
#include "defectlab/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace defectlab;

namespace {

struct Toy {
  Matrix X;
  std::vector<int> y;
};

Toy separable() {
  Toy t;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    const double cx = label ? 0.8 : 0.2;
    t.X.push_back({cx + 0.1 * (rng.uniform() - 0.5), cx + 0.1 * (rng.uniform() - 0.5)});
    t.y.push_back(label);
  }
  return t;
}

Toy noisy(std::size_t n, std::uint64_t seed) {
  Toy t;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform();
    const double z = 2.5 * x[0] - 1.5 * x[1] + 0.8 * rng.normal();
    t.X.push_back(x);
    t.y.push_back(z > 0.5 ? 1 : 0);
  }
  return t;
}

double accuracy(const Model& m, const Toy& t) {
  const auto p = predict_all(m, t.X);
  int ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == t.y[i];
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

ModelSpec spec_for(LearnerKind kind, std::uint64_t seed = 1) {
  ModelSpec s;
  s.kind = kind;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Learners, SeparableTrainAccuracy) {
  const auto t = separable();
  for (auto kind : {LearnerKind::nb, LearnerKind::lr, LearnerKind::svm, LearnerKind::rf}) {
    ModelSpec s = spec_for(kind);
    if (kind == LearnerKind::lr) s.epochs = 3000;
    const auto m = fit(s, t.X, t.y);
    EXPECT_DOUBLE_EQ(accuracy(m, t), 1.0) << to_string(kind);
  }
}

TEST(Learners, SingleClassFails) {
  const auto t = separable();
  std::vector<int> ones(t.y.size(), 1);
  for (auto kind : {LearnerKind::nb, LearnerKind::lr, LearnerKind::svm, LearnerKind::rf})
    EXPECT_THROW(fit(spec_for(kind), t.X, ones), FitError) << to_string(kind);
}

TEST(Learners, ForestIsDeterministic) {
  const auto t = noisy(120, 3);
  const auto a = fit(spec_for(LearnerKind::rf, 9), t.X, t.y);
  const auto b = fit(spec_for(LearnerKind::rf, 9), t.X, t.y);
  std::ostringstream sa, sb;
  save_model(sa, a);
  save_model(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(feature_importance(a), feature_importance(b));
  const auto c = fit(spec_for(LearnerKind::rf, 10), t.X, t.y);
  std::ostringstream sc;
  save_model(sc, c);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Learners, ForestScoreIsVoteFraction) {
  Forest f;
  for (int i = 0; i < 100; ++i) {
    Tree t;
    TreeNode leaf;
    leaf.count0 = i < 73 ? 0 : 4;
    leaf.count1 = i < 73 ? 4 : 0;
    t.nodes.push_back(leaf);
    f.trees.push_back(t);
  }
  f.importances = {0.0};
  Model m;
  m.kind = LearnerKind::rf;
  m.features = 1;
  m.body = f;
  EXPECT_DOUBLE_EQ(score(m, {0.3}), 0.73);
  EXPECT_EQ(predict(m, {0.3}), 1);
}

TEST(Learners, ZeroLogisticScoresHalf) {
  Model m;
  m.kind = LearnerKind::lr;
  m.features = 2;
  m.body = LogisticModel{{{0.0, 0.0}, 0.0}};
  EXPECT_DOUBLE_EQ(score(m, {3.0, -1.0}), 0.5);
}

TEST(Learners, DimensionMismatch) {
  Model m;
  m.kind = LearnerKind::lr;
  m.features = 2;
  m.body = LogisticModel{{{0.0, 0.0}, 0.0}};
  EXPECT_THROW(score(m, {1.0}), ScoreError);
}

TEST(Learners, NaiveBayesAtDefectiveMean) {
  Matrix X;
  std::vector<int> y;
  for (double v : {0.0, 0.5, 1.0, -0.5, -1.0}) {
    X.push_back({v});
    y.push_back(0);
  }
  for (double v : {9.0, 10.0, 11.0}) {
    X.push_back({v});
    y.push_back(1);
  }
  const auto m = fit(spec_for(LearnerKind::nb), X, y);
  const auto& nb = std::get<GaussianNB>(m.body);
  EXPECT_DOUBLE_EQ(nb.mean[1][0], 10.0);
  EXPECT_DOUBLE_EQ(nb.prior[1], 3.0 / 8.0);
  EXPECT_GT(score(m, {10.0}), 0.5);
  EXPECT_LT(score(m, {0.0}), 0.5);
}

TEST(Learners, NaiveBayesVarianceFloor) {
  Matrix X = {{1, 0}, {1, 1}, {1, 2}, {1, 5}};
  std::vector<int> y = {0, 0, 1, 1};
  const auto m = fit(spec_for(LearnerKind::nb), X, y);
  const auto& nb = std::get<GaussianNB>(m.body);
  for (int c = 0; c < 2; ++c) EXPECT_GT(nb.var[c][0], 0.0);
  EXPECT_TRUE(std::isfinite(score(m, {1, 3})));
}

TEST(Learners, ForestImportanceOnPerfectRootSplit) {
  Rng rng(2);
  Matrix X;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 3 == 0;
    X.push_back({label ? 0.9 : 0.1, rng.uniform()});
    y.push_back(label);
  }
  ModelSpec s = spec_for(LearnerKind::rf, 4);
  s.mtry = 2;
  const auto imp = feature_importance(fit(s, X, y));
  EXPECT_NEAR(imp[0], 1.0, 1e-12);
  EXPECT_NEAR(imp[1], 0.0, 1e-12);
}

TEST(Learners, ForestImportanceSumsToOne) {
  const auto t = noisy(150, 8);
  const auto imp = feature_importance(fit(spec_for(LearnerKind::rf, 2), t.X, t.y));
  for (double v : imp) EXPECT_GE(v, 0.0);
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 0);
}

TEST(Learners, LogisticImportanceIsAbsBeta) {
  Model m;
  m.kind = LearnerKind::lr;
  m.features = 2;
  m.body = LogisticModel{{{2.0, -1.0}, 0.3}};
  EXPECT_EQ(feature_importance(m), (std::vector<double>{2.0, 1.0}));
}

TEST(Learners, ImportanceUnsupported) {
  const auto t = separable();
  EXPECT_THROW(feature_importance(fit(spec_for(LearnerKind::nb), t.X, t.y)), UnsupportedError);
  EXPECT_THROW(feature_importance(fit(spec_for(LearnerKind::svm), t.X, t.y)), UnsupportedError);
}

TEST(Learners, LogisticGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 3 + rng.index(10), f = 1 + rng.index(4);
    Matrix X(n, std::vector<double>(f));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : X[i]) v = rng.normal();
      y[i] = rng.uniform() < 0.5;
    }
    LinearModel m;
    m.beta.resize(f);
    for (auto& b : m.beta) b = rng.normal();
    m.beta0 = rng.normal();
    const double lambda = 0.01 * rng.uniform();
    const auto g = logistic_gradient(m, X, y, lambda);
    const double h = 1e-6;
    auto check = [&](double analytic, auto bump) {
      LinearModel up = m, down = m;
      bump(up, h);
      bump(down, -h);
      const double numeric =
          (logistic_loss(up, X, y, lambda) - logistic_loss(down, X, y, lambda)) / (2 * h);
      EXPECT_LE(std::abs(analytic - numeric), 1e-5 * std::max(1.0, std::abs(numeric)))
          << "seed " << seed;
    };
    for (std::size_t j = 0; j < f; ++j)
      check(g.beta[j], [j](LinearModel& lm, double d) { lm.beta[j] += d; });
    check(g.beta0, [](LinearModel& lm, double d) { lm.beta0 += d; });
  }
}

TEST(Learners, SvmKeepsBestObjective) {
  const auto t = noisy(80, 4);
  ModelSpec s = spec_for(LearnerKind::svm);
  const auto m = fit(s, t.X, t.y);
  const auto& lin = std::get<SvmModel>(m.body).linear;
  LinearModel zero;
  zero.beta.assign(5, 0.0);
  EXPECT_LE(svm_objective(lin, t.X, t.y, s.lambda), svm_objective(zero, t.X, t.y, s.lambda));
}

TEST(Learners, SaveLoadRoundTrip) {
  const auto t = noisy(60, 6);
  for (auto kind : {LearnerKind::nb, LearnerKind::lr, LearnerKind::svm, LearnerKind::rf}) {
    const auto m = fit(spec_for(kind), t.X, t.y);
    std::stringstream buf;
    save_model(buf, m);
    const auto back = load_model(buf);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(score_all(back, t.X), score_all(m, t.X)) << to_string(kind);
  }
}

TEST(Learners, DuplicatingPureLeafRowKeepsPrediction) {
  const auto t = noisy(80, 12);
  const auto base = fit(single_tree_spec(3), t.X, t.y);
  const auto& tree = std::get<Forest>(base.body).trees.front();
  int checked = 0;
  for (std::size_t i = 0; i < t.X.size(); i += 7) {
    const auto& l = tree.leaf(t.X[i]);
    if ((l.count0 == 0) == (l.count1 == 0)) continue;
    Toy dup = t;
    dup.X.push_back(t.X[i]);
    dup.y.push_back(t.y[i]);
    const auto m = fit(single_tree_spec(3), dup.X, dup.y);
    EXPECT_EQ(predict(m, t.X[i]), predict(base, t.X[i])) << "row " << i;
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(Learners, EnsembleVarianceBelowSingleTree) {
  const auto train = noisy(200, 21);
  const auto test = noisy(300, 22);
  std::vector<double> forest_auc, tree_auc;
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng(derive_seed(77, {s}));
    Matrix X;
    std::vector<int> y;
    for (std::size_t i = 0; i < train.X.size(); ++i) {
      const auto r = rng.index(train.X.size());
      X.push_back(train.X[r]);
      y.push_back(train.y[r]);
    }
    const auto rf = fit(spec_for(LearnerKind::rf, s), X, y);
    const auto tree = fit(single_tree_spec(s), X, y);
    forest_auc.push_back(*auc(score_all(rf, test.X), test.y));
    tree_auc.push_back(*auc(score_all(tree, test.X), test.y));
  }
  EXPECT_LE(iqr(forest_auc), iqr(tree_auc));
}
