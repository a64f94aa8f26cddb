#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace defectlab {

struct Dataset;

using Matrix = std::vector<std::vector<double>>;

enum class LearnerKind { nb, lr, svm, rf };

const char* to_string(LearnerKind kind);
LearnerKind learner_from_string(const std::string& s);

struct ModelSpec {
  LearnerKind kind = LearnerKind::rf;
  std::uint64_t seed = 0;
  // lr and svm: full-batch descent
  double rate = 0.1;
  int epochs = 500;
  double lambda = 1e-4;
  // rf
  int trees = 100;
  int mtry = 0;  // 0 = floor(sqrt(F))
  int min_split = 2;
  bool bootstrap = true;
};

/// Spec for one unpruned CART tree on the full sample using every feature.
ModelSpec single_tree_spec(std::uint64_t seed);

struct GaussianNB {
  double prior[2] = {0, 0};
  std::vector<double> mean[2];
  std::vector<double> var[2];
};

struct LinearModel {
  std::vector<double> beta;
  double beta0 = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  int count0 = 0;
  int count1 = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at 0
  /// Leaf reached by x.
  const TreeNode& leaf(const std::vector<double>& x) const;
  bool votes_defective(const std::vector<double>& x) const;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<double> importances;
};

struct LogisticModel {
  LinearModel linear;
};

struct SvmModel {
  LinearModel linear;
};

struct Model {
  LearnerKind kind = LearnerKind::rf;
  std::size_t features = 0;
  std::variant<GaussianNB, LogisticModel, SvmModel, Forest> body;
};

Model fit(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y);
Model fit(const ModelSpec& spec, const Dataset& train);

/// Probability-like score in [0,1] for nb, lr and rf; signed margin for svm.
double score(const Model& model, const std::vector<double>& x);
int predict(const Model& model, const std::vector<double>& x);
std::vector<double> score_all(const Model& model, const Matrix& X);
std::vector<int> predict_all(const Model& model, const Matrix& X);

/// rf: normalized impurity decrease; lr: |beta|. Others throw UnsupportedError.
std::vector<double> feature_importance(const Model& model);

/// Regularized mean log-loss and its gradient (intercept unregularized).
double logistic_loss(const LinearModel& m, const Matrix& X, const std::vector<int>& y, double lambda);
LinearModel logistic_gradient(const LinearModel& m, const Matrix& X, const std::vector<int>& y,
                              double lambda);
/// lambda/2 |w|^2 + mean hinge loss with labels mapped to -1/+1.
double svm_objective(const LinearModel& m, const Matrix& X, const std::vector<int>& y, double lambda);

void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);

}  // namespace defectlab
