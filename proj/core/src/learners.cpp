#include "defectlab/learners.hpp"

#include "defectlab/dataset.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>

namespace defectlab {

const char* to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::nb: return "nb";
    case LearnerKind::lr: return "lr";
    case LearnerKind::svm: return "svm";
    case LearnerKind::rf: return "rf";
  }
  return "?";
}

LearnerKind learner_from_string(const std::string& s) {
  if (s == "nb") return LearnerKind::nb;
  if (s == "lr") return LearnerKind::lr;
  if (s == "svm") return LearnerKind::svm;
  if (s == "rf") return LearnerKind::rf;
  throw ConfigError("unknown learner '" + s + "' (expected nb, lr, svm or rf)");
}

ModelSpec single_tree_spec(std::uint64_t seed) {
  ModelSpec s;
  s.kind = LearnerKind::rf;
  s.seed = seed;
  s.trees = 1;
  s.mtry = -1;
  s.bootstrap = false;
  return s;
}

const TreeNode& Tree::leaf(const std::vector<double>& x) const {
  const TreeNode* n = &nodes.front();
  while (n->feature >= 0) n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
  return *n;
}

bool Tree::votes_defective(const std::vector<double>& x) const {
  const auto& l = leaf(x);
  return l.count1 > l.count0;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear_term(const LinearModel& m, const std::vector<double>& x) {
  double z = m.beta0;
  for (std::size_t j = 0; j < x.size(); ++j) z += m.beta[j] * x[j];
  return z;
}

void check_training(const Matrix& X, const std::vector<int>& y) {
  if (X.empty() || X.size() != y.size()) throw FitError("training data is empty or ragged");
  const std::size_t f = X.front().size();
  bool has0 = false, has1 = false;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != f) throw FitError("training rows differ in width");
    (y[i] ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw FitError("training labels hold a single class");
}

GaussianNB fit_nb(const Matrix& X, const std::vector<int>& y) {
  GaussianNB nb;
  const std::size_t f = X.front().size();
  double n[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    nb.mean[c].assign(f, 0);
    nb.var[c].assign(f, 0);
  }
  for (std::size_t i = 0; i < X.size(); ++i) {
    const int c = y[i] ? 1 : 0;
    n[c] += 1;
    for (std::size_t j = 0; j < f; ++j) nb.mean[c][j] += X[i][j];
  }
  for (int c = 0; c < 2; ++c)
    for (auto& m : nb.mean[c]) m /= n[c];
  double max_var = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const int c = y[i] ? 1 : 0;
    for (std::size_t j = 0; j < f; ++j) {
      const double d = X[i][j] - nb.mean[c][j];
      nb.var[c][j] += d * d;
    }
  }
  for (int c = 0; c < 2; ++c)
    for (auto& v : nb.var[c]) {
      v /= n[c];
      max_var = std::max(max_var, v);
    }
  for (std::size_t j = 0; j < f; ++j) {
    double mu = 0, s = 0;
    for (const auto& row : X) mu += row[j];
    mu /= static_cast<double>(X.size());
    for (const auto& row : X) s += (row[j] - mu) * (row[j] - mu);
    max_var = std::max(max_var, s / static_cast<double>(X.size()));
  }
  const double eps = max_var > 0 ? 1e-9 * max_var : 1e-9;
  for (int c = 0; c < 2; ++c)
    for (auto& v : nb.var[c]) v += eps;
  nb.prior[0] = n[0] / static_cast<double>(X.size());
  nb.prior[1] = n[1] / static_cast<double>(X.size());
  return nb;
}

double score_nb(const GaussianNB& nb, const std::vector<double>& x) {
  double l[2];
  for (int c = 0; c < 2; ++c) {
    l[c] = std::log(nb.prior[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - nb.mean[c][j];
      l[c] -= 0.5 * std::log(2 * std::numbers::pi * nb.var[c][j]) + d * d / (2 * nb.var[c][j]);
    }
  }
  return sigmoid(l[1] - l[0]);
}

LinearModel fit_lr(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y) {
  LinearModel m;
  m.beta.assign(X.front().size(), 0.0);
  for (int e = 0; e < spec.epochs; ++e) {
    const auto g = logistic_gradient(m, X, y, spec.lambda);
    for (std::size_t j = 0; j < m.beta.size(); ++j) m.beta[j] -= spec.rate * g.beta[j];
    m.beta0 -= spec.rate * g.beta0;
  }
  return m;
}

LinearModel fit_svm(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y) {
  const std::size_t f = X.front().size();
  const auto n = static_cast<double>(X.size());
  LinearModel m, best;
  m.beta.assign(f, 0.0);
  best = m;
  double best_obj = svm_objective(m, X, y, spec.lambda);
  std::vector<double> g(f);
  for (int e = 0; e < spec.epochs; ++e) {
    for (std::size_t j = 0; j < f; ++j) g[j] = spec.lambda * m.beta[j];
    double g0 = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double t = y[i] ? 1.0 : -1.0;
      if (t * linear_term(m, X[i]) < 1.0) {
        for (std::size_t j = 0; j < f; ++j) g[j] -= t * X[i][j] / n;
        g0 -= t / n;
      }
    }
    for (std::size_t j = 0; j < f; ++j) m.beta[j] -= spec.rate * g[j];
    m.beta0 -= spec.rate * g0;
    const double obj = svm_objective(m, X, y, spec.lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best = m;
    }
  }
  return best;
}

double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n == 0) return 0;
  const double p = c1 / n;
  return 2 * p * (1 - p);
}

struct TreeBuilder {
  const Matrix& X;
  const std::vector<int>& y;
  int mtry;
  int min_split;
  Rng& rng;
  Tree tree;
  std::vector<double> importance;
  double root_n = 0;

  struct Split {
    int feature = -1;
    double threshold = 0;
    double decrease = 0;
  };

  Split best_split(const std::vector<std::size_t>& rows, int c0, int c1) {
    const std::size_t f = X.front().size();
    std::vector<std::size_t> order(f);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    const double n = static_cast<double>(rows.size());
    const double parent = gini(c0, c1);
    Split best;
    std::vector<std::pair<double, int>> v(rows.size());
    int examined = 0;
    for (std::size_t k = 0; k < f; ++k) {
      if (examined >= mtry && best.feature >= 0) break;
      const std::size_t j = order[k];
      for (std::size_t i = 0; i < rows.size(); ++i) v[i] = {X[rows[i]][j], y[rows[i]]};
      std::sort(v.begin(), v.end());
      ++examined;
      if (v.front().first == v.back().first) continue;
      double l0 = 0, l1 = 0;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        (v[i].second ? l1 : l0) += 1;
        if (v[i].first == v[i + 1].first) continue;
        const double nl = l0 + l1, nr = n - nl;
        const double child = (nl * gini(l0, l1) + nr * gini(c0 - l0, c1 - l1)) / n;
        const double dec = parent - child;
        if (best.feature < 0 || dec > best.decrease) {
          best.feature = static_cast<int>(j);
          best.threshold = v[i].first + (v[i + 1].first - v[i].first) / 2;
          if (best.threshold >= v[i + 1].first) best.threshold = v[i].first;
          best.decrease = dec;
        }
      }
    }
    return best;
  }

  int build(std::vector<std::size_t> rows) {
    int c0 = 0, c1 = 0;
    for (auto r : rows) (y[r] ? c1 : c0) += 1;
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0, -1, -1, c0, c1});
    if (c0 == 0 || c1 == 0 || static_cast<int>(rows.size()) < min_split) return id;
    const Split s = best_split(rows, c0, c1);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (X[r][static_cast<std::size_t>(s.feature)] <= s.threshold ? left : right).push_back(r);
    importance[static_cast<std::size_t>(s.feature)] += static_cast<double>(rows.size()) / root_n * s.decrease;
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left));
    const int r = build(std::move(right));
    tree.nodes[static_cast<std::size_t>(id)].feature = s.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = s.threshold;
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

Forest fit_rf(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y) {
  if (spec.trees < 1) throw FitError("forest needs at least one tree");
  const std::size_t f = X.front().size();
  int mtry = spec.mtry;
  if (mtry == 0) mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(f)))));
  if (mtry < 0 || mtry > static_cast<int>(f)) mtry = static_cast<int>(f);
  Forest forest;
  forest.importances.assign(f, 0.0);
  int contributing = 0;
  for (int t = 0; t < spec.trees; ++t) {
    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(t)}));
    std::vector<std::size_t> rows(X.size());
    if (spec.bootstrap) {
      for (auto& r : rows) r = rng.index(X.size());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder b{X, y, mtry, spec.min_split, rng, {}, std::vector<double>(f, 0.0),
                  static_cast<double>(rows.size())};
    b.build(std::move(rows));
    const double total = std::accumulate(b.importance.begin(), b.importance.end(), 0.0);
    if (total > 0) {
      for (std::size_t j = 0; j < f; ++j) forest.importances[j] += b.importance[j] / total;
      ++contributing;
    }
    forest.trees.push_back(std::move(b.tree));
  }
  const double total = std::accumulate(forest.importances.begin(), forest.importances.end(), 0.0);
  if (contributing > 0 && total > 0)
    for (auto& v : forest.importances) v /= total;
  return forest;
}

}  // namespace

double logistic_loss(const LinearModel& m, const Matrix& X, const std::vector<int>& y, double lambda) {
  double loss = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = linear_term(m, X[i]);
    // log(1 + e^z) - y z, computed stably
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - (y[i] ? z : 0.0);
  }
  loss /= static_cast<double>(X.size());
  double reg = 0;
  for (double b : m.beta) reg += b * b;
  return loss + 0.5 * lambda * reg;
}

LinearModel logistic_gradient(const LinearModel& m, const Matrix& X, const std::vector<int>& y,
                              double lambda) {
  LinearModel g;
  g.beta.assign(m.beta.size(), 0.0);
  const auto n = static_cast<double>(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double r = sigmoid(linear_term(m, X[i])) - (y[i] ? 1.0 : 0.0);
    for (std::size_t j = 0; j < m.beta.size(); ++j) g.beta[j] += r * X[i][j] / n;
    g.beta0 += r / n;
  }
  for (std::size_t j = 0; j < m.beta.size(); ++j) g.beta[j] += lambda * m.beta[j];
  return g;
}

double svm_objective(const LinearModel& m, const Matrix& X, const std::vector<int>& y, double lambda) {
  double hinge = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double t = y[i] ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - t * linear_term(m, X[i]));
  }
  double reg = 0;
  for (double b : m.beta) reg += b * b;
  return 0.5 * lambda * reg + hinge / static_cast<double>(X.size());
}

Model fit(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y) {
  check_training(X, y);
  Model m;
  m.kind = spec.kind;
  m.features = X.front().size();
  switch (spec.kind) {
    case LearnerKind::nb: m.body = fit_nb(X, y); break;
    case LearnerKind::lr: m.body = LogisticModel{fit_lr(spec, X, y)}; break;
    case LearnerKind::svm: m.body = SvmModel{fit_svm(spec, X, y)}; break;
    case LearnerKind::rf: m.body = fit_rf(spec, X, y); break;
  }
  return m;
}

Model fit(const ModelSpec& spec, const Dataset& train) { return fit(spec, train.X, train.y); }

double score(const Model& model, const std::vector<double>& x) {
  if (x.size() != model.features)
    throw ScoreError("expected " + std::to_string(model.features) + " features, got " +
                     std::to_string(x.size()));
  return std::visit(
      [&](const auto& body) -> double {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, GaussianNB>) {
          return score_nb(body, x);
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          return sigmoid(linear_term(body.linear, x));
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          return linear_term(body.linear, x);
        } else {
          int votes = 0;
          for (const auto& t : body.trees) votes += t.votes_defective(x) ? 1 : 0;
          return static_cast<double>(votes) / static_cast<double>(body.trees.size());
        }
      },
      model.body);
}

int predict(const Model& model, const std::vector<double>& x) {
  const double s = score(model, x);
  return model.kind == LearnerKind::svm ? (s > 0 ? 1 : 0) : (s > 0.5 ? 1 : 0);
}

std::vector<double> score_all(const Model& model, const Matrix& X) {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& x : X) out.push_back(score(model, x));
  return out;
}

std::vector<int> predict_all(const Model& model, const Matrix& X) {
  std::vector<int> out;
  out.reserve(X.size());
  for (const auto& x : X) out.push_back(predict(model, x));
  return out;
}

std::vector<double> feature_importance(const Model& model) {
  if (const auto* f = std::get_if<Forest>(&model.body)) return f->importances;
  if (const auto* lr = std::get_if<LogisticModel>(&model.body)) {
    std::vector<double> out;
    for (double b : lr->linear.beta) out.push_back(std::abs(b));
    return out;
  }
  throw UnsupportedError(std::string("feature importance is not defined for ") + to_string(model.kind));
}

namespace {

nlohmann::json linear_json(const LinearModel& m) { return {{"beta", m.beta}, {"beta0", m.beta0}}; }

LinearModel linear_from(const nlohmann::json& j) {
  return {j.at("beta").get<std::vector<double>>(), j.at("beta0").get<double>()};
}

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  nlohmann::ordered_json j;
  j["format"] = "defectlab-model";
  j["version"] = 1;
  j["kind"] = to_string(model.kind);
  j["features"] = model.features;
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, GaussianNB>) {
          j["prior"] = {body.prior[0], body.prior[1]};
          j["mean"] = {body.mean[0], body.mean[1]};
          j["var"] = {body.var[0], body.var[1]};
        } else if constexpr (std::is_same_v<T, LogisticModel> || std::is_same_v<T, SvmModel>) {
          j["linear"] = linear_json(body.linear);
        } else {
          j["importances"] = body.importances;
          auto trees = nlohmann::json::array();
          for (const auto& t : body.trees) {
            auto nodes = nlohmann::json::array();
            for (const auto& n : t.nodes)
              nodes.push_back({n.feature, n.threshold, n.left, n.right, n.count0, n.count1});
            trees.push_back(std::move(nodes));
          }
          j["trees"] = std::move(trees);
        }
      },
      model.body);
  out << j.dump() << '\n';
}

Model load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file is not JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "defectlab-model") throw ConfigError("not a defectlab model");
    if (j.at("version") != 1) throw ConfigError("unsupported model version");
    Model m;
    m.kind = learner_from_string(j.at("kind").get<std::string>());
    m.features = j.at("features").get<std::size_t>();
    switch (m.kind) {
      case LearnerKind::nb: {
        GaussianNB nb;
        for (int c = 0; c < 2; ++c) {
          nb.prior[c] = j.at("prior").at(c).get<double>();
          nb.mean[c] = j.at("mean").at(c).get<std::vector<double>>();
          nb.var[c] = j.at("var").at(c).get<std::vector<double>>();
        }
        m.body = std::move(nb);
        break;
      }
      case LearnerKind::lr: m.body = LogisticModel{linear_from(j.at("linear"))}; break;
      case LearnerKind::svm: m.body = SvmModel{linear_from(j.at("linear"))}; break;
      case LearnerKind::rf: {
        Forest f;
        f.importances = j.at("importances").get<std::vector<double>>();
        for (const auto& t : j.at("trees")) {
          Tree tree;
          for (const auto& n : t)
            tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                  n.at(3).get<int>(), n.at(4).get<int>(), n.at(5).get<int>()});
          f.trees.push_back(std::move(tree));
        }
        m.body = std::move(f);
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace defectlab
