#include "defectlab/dataset.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/numeric.hpp"
#include "defectlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace defectlab {

namespace {

const double kNaN = std::nan("");

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    return std::hash<std::string>{}(p.first) * 31u ^ std::hash<std::string>{}(p.second);
  }
};

double product_effort(const ProductRow& p, double lt) {
  auto it = p.values.find("CountLineCode");
  if (it == p.values.end() || std::isnan(it->second)) return lt;
  return it->second;
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::process: return "P";
    case Mode::product: return "C";
    case Mode::combined: return "P+C";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "P") return Mode::process;
  if (s == "C") return Mode::product;
  if (s == "P+C") return Mode::combined;
  throw ConfigError("unknown mode '" + s + "' (expected P, C or P+C)");
}

const char* to_string(Granularity g) { return g == Granularity::file ? "file" : "package"; }

Granularity granularity_from_string(const std::string& s) {
  if (s == "file") return Granularity::file;
  if (s == "package") return Granularity::package;
  throw ConfigError("unknown granularity '" + s + "' (expected file or package)");
}

const char* to_string(LabelLevel level) { return level == LabelLevel::jit ? "jit" : "release"; }

LabelLevel level_from_string(const std::string& s) {
  if (s == "jit") return LabelLevel::jit;
  if (s == "release") return LabelLevel::release;
  throw ConfigError("unknown level '" + s + "' (expected jit or release)");
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

void Dataset::check() const {
  const auto n = y.size();
  if (X.size() != n || effort.size() != n || meta.size() != n)
    throw DataError("dataset arrays disagree in length");
  for (const auto& row : X)
    if (row.size() != feature_names.size()) throw DataError("dataset row width differs from feature count");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset d;
  d.feature_names = feature_names;
  d.mode = mode;
  d.granularity = granularity;
  d.level = level;
  d.X.reserve(rows.size());
  for (auto r : rows) {
    d.X.push_back(X.at(r));
    d.y.push_back(y[r]);
    d.effort.push_back(effort[r]);
    d.meta.push_back(meta[r]);
  }
  return d;
}

std::optional<std::size_t> Dataset::feature(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names.begin());
}

std::string package_of(const std::string& canonical_id) {
  const auto slash = canonical_id.rfind('/');
  return slash == std::string::npos ? std::string(".") : canonical_id.substr(0, slash);
}

Dataset assemble(const std::vector<ProcessRow>& process, const std::vector<ProductRow>* product,
                 Mode mode, Granularity granularity, LabelLevel level, const std::string& project,
                 AssembleReport* report) {
  AssembleReport rep;
  rep.process_rows = process.size();
  Dataset d;
  d.mode = mode;
  d.granularity = Granularity::file;
  d.level = LabelLevel::jit;
  if (mode != Mode::product) d.feature_names = process_metric_names();
  if (mode != Mode::process) {
    if (!product) throw DataError(std::string("mode ") + to_string(mode) + " needs product metrics");
    const auto& names = product_metric_names();
    d.feature_names.insert(d.feature_names.end(), names.begin(), names.end());
  }

  std::unordered_map<std::pair<std::string, std::string>, const ProductRow*, PairHash> by_key;
  if (product && mode != Mode::process) {
    rep.product_rows = product->size();
    for (const auto& p : *product) by_key[{p.canonical_id, p.commit_hash}] = &p;
  }
  std::size_t matched_product = 0;
  for (const auto& r : process) {
    const ProductRow* p = nullptr;
    if (mode != Mode::process) {
      auto it = by_key.find({r.canonical_id, r.commit_hash});
      if (it == by_key.end()) {
        ++rep.dropped_process;
        continue;
      }
      p = it->second;
      ++matched_product;
    }
    std::vector<double> x;
    x.reserve(d.feature_names.size());
    if (mode != Mode::product) {
      const auto v = r.values();
      x.insert(x.end(), v.begin(), v.end());
    }
    if (p) {
      for (const auto& n : product_metric_names()) {
        auto it = p->values.find(n);
        x.push_back(it == p->values.end() ? kNaN : it->second);
      }
    }
    d.X.push_back(std::move(x));
    d.y.push_back(r.defective ? 1 : 0);
    d.effort.push_back(p ? product_effort(*p, r.lt) : r.lt);
    d.meta.push_back({project, r.canonical_id, r.release_index, r.commit_hash, false});
  }
  if (mode != Mode::process) rep.dropped_product = rep.product_rows - matched_product;
  if (report) *report = rep;
  if (d.size() == 0) throw DataError("no overlapping keys");

  if (level == LabelLevel::release) d = to_release_level(d);
  if (granularity == Granularity::package) d = aggregate_packages(d);
  return d;
}

Dataset select_mode(const Dataset& data, Mode mode) {
  if (data.mode == mode) return data;
  if (data.mode != Mode::combined)
    throw DataError(std::string("cannot derive mode ") + to_string(mode) + " from a " +
                    to_string(data.mode) + " dataset");
  if (data.granularity != Granularity::file)
    throw DataError("mode selection needs a file-level dataset");
  const auto& wanted = mode == Mode::process ? process_metric_names() : product_metric_names();
  std::vector<std::size_t> cols;
  Dataset d;
  for (const auto& n : wanted)
    if (auto c = data.feature(n)) {
      cols.push_back(*c);
      d.feature_names.push_back(n);
    }
  if (cols.empty()) throw DataError(std::string("dataset has no ") + to_string(mode) + " features");
  d.mode = mode;
  d.granularity = data.granularity;
  d.level = data.level;
  d.y = data.y;
  d.meta = data.meta;
  const auto lt = data.feature("lt");
  const auto loc = data.feature("CountLineCode");
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> x;
    x.reserve(cols.size());
    for (auto c : cols) x.push_back(data.X[i][c]);
    d.X.push_back(std::move(x));
    double e = data.effort[i];
    if (mode == Mode::process && lt) e = data.X[i][*lt];
    if (mode == Mode::product && loc && !std::isnan(data.X[i][*loc])) e = data.X[i][*loc];
    d.effort.push_back(e);
  }
  return d;
}

Dataset to_release_level(const Dataset& data) {
  if (data.level == LabelLevel::release) return data;
  std::map<std::pair<std::string, int>, std::size_t> slot;
  std::vector<std::size_t> last;
  std::vector<int> any;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, fresh] = slot.emplace(std::make_pair(data.meta[i].unit, data.meta[i].release), last.size());
    if (fresh) {
      last.push_back(i);
      any.push_back(data.y[i]);
    } else {
      last[it->second] = i;
      any[it->second] = std::max(any[it->second], data.y[i]);
    }
  }
  Dataset d = data.subset(last);
  d.y = any;
  d.level = LabelLevel::release;
  return d;
}

Dataset aggregate_packages(const Dataset& data) {
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& m = data.meta[i];
    std::string pkg = data.granularity == Granularity::file ? package_of(m.unit) : m.unit;
    std::string period = data.level == LabelLevel::jit ? m.commit : std::to_string(m.release);
    auto [it, fresh] = slot.emplace(std::make_pair(pkg, period), groups.size());
    if (fresh) {
      groups.emplace_back();
      names.push_back(pkg);
    }
    groups[it->second].push_back(i);
  }
  Dataset d;
  d.feature_names = data.feature_names;
  d.mode = data.mode;
  d.granularity = Granularity::package;
  d.level = data.level;
  const std::size_t f = data.feature_names.size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& rows = groups[g];
    std::vector<double> x(f);
    for (std::size_t j = 0; j < f; ++j) {
      std::vector<double> v;
      for (auto r : rows)
        if (!std::isnan(data.X[r][j])) v.push_back(data.X[r][j]);
      x[j] = v.empty() ? kNaN : median(std::move(v));
    }
    int label = 0;
    double effort = 0;
    for (auto r : rows) {
      label = std::max(label, data.y[r]);
      effort += data.effort[r];
    }
    RowMeta m = data.meta[rows.back()];
    m.unit = names[g];
    m.release = data.meta[rows.front()].release;
    d.X.push_back(std::move(x));
    d.y.push_back(label);
    d.effort.push_back(effort);
    d.meta.push_back(std::move(m));
  }
  return d;
}

std::pair<Dataset, Dataset> preprocess(const Dataset& train, const Dataset& test,
                                       PreprocessReport* report) {
  if (train.size() == 0) throw DataError("training set is empty");
  if (train.feature_names != test.feature_names)
    throw DataError("train and test feature lists differ");
  PreprocessReport rep;
  const std::size_t f = train.feature_names.size();
  struct Fit {
    std::size_t column;
    double fill, lo, hi;
  };
  std::vector<Fit> kept;
  for (std::size_t j = 0; j < f; ++j) {
    std::vector<double> v;
    for (const auto& row : train.X)
      if (!std::isnan(row[j])) v.push_back(row[j]);
    const std::size_t missing = train.size() - v.size();
    if (v.empty()) {
      rep.dropped.push_back(train.feature_names[j]);
      continue;
    }
    const double fill = median(v);
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi) {
      rep.dropped.push_back(train.feature_names[j]);
      continue;
    }
    if (missing) rep.imputed.emplace_back(train.feature_names[j], missing);
    kept.push_back({j, fill, *lo, *hi});
  }
  auto transform = [&](const Dataset& in, bool clamp) {
    Dataset out;
    out.mode = in.mode;
    out.granularity = in.granularity;
    out.level = in.level;
    out.y = in.y;
    out.effort = in.effort;
    out.meta = in.meta;
    for (const auto& k : kept) out.feature_names.push_back(in.feature_names[k.column]);
    out.X.reserve(in.size());
    for (const auto& row : in.X) {
      std::vector<double> x;
      x.reserve(kept.size());
      for (const auto& k : kept) {
        double v = row[k.column];
        if (std::isnan(v)) v = k.fill;
        v = (v - k.lo) / (k.hi - k.lo);
        if (clamp) v = std::clamp(v, 0.0, 1.0);
        x.push_back(v);
      }
      out.X.push_back(std::move(x));
    }
    return out;
  };
  if (report) *report = rep;
  return {transform(train, false), transform(test, true)};
}

Dataset smote(const Dataset& train, const ResampleConfig& cfg) {
  const std::size_t pos = train.positives();
  const std::size_t neg = train.size() - pos;
  if (pos == 0 || neg == 0) throw ResampleError("training set has a single class");
  if (pos == neg) return train;
  const int minority_label = pos < neg ? 1 : 0;
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train.y[i] == minority_label) minority.push_back(i);
  const std::size_t m = minority.size();
  if (m < 2) throw ResampleError("minority class has fewer than 2 rows");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.k, 1)), m - 1);

  std::vector<std::vector<std::size_t>> knn(m);
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(m - 1);
    const auto& xa = train.X[minority[a]];
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const auto& xb = train.X[minority[b]];
      double s = 0;
      for (std::size_t j = 0; j < xa.size(); ++j) s += (xa[j] - xb[j]) * (xa[j] - xb[j]);
      dist.emplace_back(s, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t i = 0; i < k; ++i) knn[a].push_back(dist[i].second);
  }

  Dataset out = train;
  Rng rng(cfg.seed);
  const std::size_t need = std::max(pos, neg) - m;
  for (std::size_t s = 0; s < need; ++s) {
    const std::size_t a = rng.index(m);
    const std::size_t b = knn[a][rng.index(k)];
    const double u = rng.uniform();
    const auto& xa = train.X[minority[a]];
    const auto& xb = train.X[minority[b]];
    std::vector<double> x(xa.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = xa[j] + u * (xb[j] - xa[j]);
    out.X.push_back(std::move(x));
    out.y.push_back(minority_label);
    const double ea = train.effort[minority[a]], eb = train.effort[minority[b]];
    out.effort.push_back(ea + u * (eb - ea));
    RowMeta meta = train.meta[minority[a]];
    meta.synthetic = true;
    out.meta.push_back(std::move(meta));
  }
  return out;
}

SplitPlan cross_val_splits(const Dataset& data, int repeats, int folds, std::uint64_t seed) {
  if (repeats < 1 || folds < 2) throw SplitError("need repeats >= 1 and folds >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data.y[i] ? pos : neg).push_back(i);
  const auto n = static_cast<std::size_t>(folds);
  if (pos.size() < n || neg.size() < n)
    throw SplitError("cross-validation needs at least " + std::to_string(folds) +
                     " rows of each class");
  SplitPlan plan;
  plan.kind = SplitKind::cross_val;
  plan.repeats = repeats;
  plan.folds = folds;
  plan.seed = seed;
  for (int m = 0; m < repeats; ++m) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(m)}));
    auto p = pos, q = neg;
    rng.shuffle(p.begin(), p.end());
    rng.shuffle(q.begin(), q.end());
    std::vector<std::size_t> fold_of(data.size());
    std::size_t slot = 0;
    for (auto r : p) fold_of[r] = slot++ % n;
    for (auto r : q) fold_of[r] = slot++ % n;
    for (std::size_t f = 0; f < n; ++f) {
      SplitPair pair;
      pair.label = std::to_string(static_cast<std::size_t>(m) * n + f + 1);
      for (std::size_t r = 0; r < data.size(); ++r) (fold_of[r] == f ? pair.test : pair.train).push_back(r);
      plan.pairs.push_back(std::move(pair));
    }
  }
  return plan;
}

SplitPlan release_splits(const Dataset& data) {
  int r_max = 0;
  for (const auto& m : data.meta) r_max = std::max(r_max, m.release);
  if (r_max < 4) throw SplitError("insufficient releases");
  SplitPlan plan;
  plan.kind = SplitKind::release_based;
  plan.releases = r_max;
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.meta[i].release <= r_max - 3) train.push_back(i);
  for (int r = r_max - 2; r <= r_max; ++r) {
    SplitPair pair;
    pair.label = "r" + std::to_string(r);
    pair.train = train;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.meta[i].release == r) pair.test.push_back(i);
    plan.pairs.push_back(std::move(pair));
  }
  return plan;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  data.check();
  out << "#defectlab-dataset v1 mode=" << to_string(data.mode)
      << " granularity=" << to_string(data.granularity) << " level=" << to_string(data.level) << '\n';
  std::vector<std::string> header = {"project", "unit", "release", "commit", "effort", "label"};
  header.insert(header.end(), data.feature_names.begin(), data.feature_names.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& m = data.meta[i];
    std::vector<std::string> cells = {m.project, m.unit, std::to_string(m.release), m.commit,
                                      csv::format_number(data.effort[i]), std::to_string(data.y[i])};
    for (double v : data.X[i]) cells.push_back(csv::format_number(v));
    csv::write_row(out, cells);
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::vector<std::string> preamble;
  const auto t = csv::read(in, &preamble);
  Dataset d;
  bool seen = false;
  for (const auto& line : preamble) {
    std::istringstream words(line.substr(1));
    std::string w;
    words >> w;
    if (w != "defectlab-dataset") continue;
    seen = true;
    words >> w;
    if (w != "v1") throw DataError("unsupported dataset version " + w);
    while (words >> w) {
      const auto eq = w.find('=');
      if (eq == std::string::npos) continue;
      const auto key = w.substr(0, eq), value = w.substr(eq + 1);
      if (key == "mode") d.mode = mode_from_string(value);
      else if (key == "granularity") d.granularity = granularity_from_string(value);
      else if (key == "level") d.level = level_from_string(value);
    }
  }
  if (!seen) throw DataError("missing #defectlab-dataset preamble");
  const auto project = t.require("project"), unit = t.require("unit"), release = t.require("release"),
             commit = t.require("commit"), effort = t.require("effort"), label = t.require("label");
  if (label + 1 != 6) throw DataError("dataset columns out of order");
  d.feature_names.assign(t.header.begin() + 6, t.header.end());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + preamble.size() + 2;
    d.meta.push_back({row[project], row[unit], static_cast<int>(csv::parse_int(row[release], line)),
                      row[commit], false});
    d.effort.push_back(csv::parse_double(row[effort], line));
    const auto y = csv::parse_int(row[label], line);
    if (y != 0 && y != 1) throw ParseError(line, "label must be 0 or 1");
    d.y.push_back(static_cast<int>(y));
    std::vector<double> x;
    x.reserve(d.feature_names.size());
    for (std::size_t j = 6; j < row.size(); ++j) x.push_back(csv::parse_double(row[j], line));
    d.X.push_back(std::move(x));
  }
  return d;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_dataset_csv(out, data);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path);
  return read_dataset_csv(in);
}

}  // namespace defectlab
