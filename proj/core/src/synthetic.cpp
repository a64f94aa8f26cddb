#include "defectlab/synthetic.hpp"

#include "defectlab/errors.hpp"
#include "defectlab/numeric.hpp"
#include "defectlab/process_metrics.hpp"
#include "defectlab/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace defectlab {

namespace {

struct FileTraits {
  std::string path;
  int package = 0;
  double size = 0;        // lines at creation
  double complexity = 0;  // standard normal
  double coupling = 0;    // standard normal
  double comments = 0;    // comment ratio
  double risk = 0;        // standard normal, shared per package when mixing is low
  double churn = 0;       // standard normal; hot files are picked more and edited more
  bool created = false;
};

enum class TraitGroup { size, complexity, coupling, comment };

TraitGroup group_of(const std::string& name) {
  if (name == "RatioCommentToCode" || name.find("Comment") != std::string::npos) return TraitGroup::comment;
  if (name.find("Cyclomatic") != std::string::npos || name.find("Essential") != std::string::npos ||
      name == "MaxNesting")
    return TraitGroup::complexity;
  if (name.find("Coupled") != std::string::npos || name.find("Class") != std::string::npos ||
      name.find("Inheritance") != std::string::npos || name.find("Cohesion") != std::string::npos)
    return TraitGroup::coupling;
  return TraitGroup::size;
}

double percentile_rank(const std::vector<double>& sorted, double v) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v);
  const auto hi = std::upper_bound(lo, sorted.end(), v);
  const double mid = (static_cast<double>(lo - sorted.begin()) + static_cast<double>(hi - sorted.begin())) / 2.0;
  return mid / static_cast<double>(sorted.size());
}

}  // namespace

Dataset generate_project(const SyntheticConfig& cfg, const std::string& name) {
  if (cfg.files < 2 || cfg.packages < 1 || cfg.authors < 1 || cfg.releases < 1 ||
      cfg.commits_per_release < 1)
    throw ConfigError("synthetic project needs files >= 2 and positive counts");
  Rng rng(cfg.seed);

  std::vector<double> package_risk(static_cast<std::size_t>(cfg.packages));
  for (auto& r : package_risk) r = rng.normal();
  std::vector<FileTraits> files(static_cast<std::size_t>(cfg.files));
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& f = files[i];
    f.package = static_cast<int>(i % static_cast<std::size_t>(cfg.packages));
    f.path = fmt::format("src/p{}/F{}.java", f.package, i);
    f.size = std::round(std::exp(3.8 + 0.7 * rng.normal()));
    f.complexity = rng.normal();
    f.coupling = rng.normal();
    f.comments = 0.05 + 0.4 * rng.uniform();
    const double mix = std::clamp(cfg.package_mixing, 0.0, 1.0);
    f.risk = std::sqrt(mix) * rng.normal() + std::sqrt(1.0 - mix) * package_risk[static_cast<std::size_t>(f.package)];
    f.churn = rng.normal();
  }
  std::vector<double> author_weight(static_cast<std::size_t>(cfg.authors));
  for (std::size_t a = 0; a < author_weight.size(); ++a) author_weight[a] = 1.0 / static_cast<double>(a + 1);
  const double author_total = std::accumulate(author_weight.begin(), author_weight.end(), 0.0);

  ProcessMiner miner;
  std::vector<ProcessRow> rows;
  std::vector<std::size_t> row_file;
  std::vector<double> row_size_after;
  std::int64_t now = 1420070400;  // 2015-01-01
  std::map<std::size_t, double> size;
  int serial = 0;
  for (int r = 1; r <= cfg.releases; ++r) {
    for (int c = 0; c < cfg.commits_per_release; ++c) {
      now += static_cast<std::int64_t>(86400.0 * (0.2 + 5.0 * rng.uniform()));
      double pick = rng.uniform() * author_total;
      std::size_t author = 0;
      while (author + 1 < author_weight.size() && pick >= author_weight[author]) pick -= author_weight[author++];

      Commit commit;
      commit.hash = fmt::format("{:040x}", cfg.seed * 1000003ULL + static_cast<std::uint64_t>(++serial));
      commit.author = fmt::format("dev{}@example.org", author + 1);
      commit.timestamp = now;
      const auto pkg = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.packages)));
      int k = 1;
      while (k < 4 && rng.uniform() < 0.45) ++k;
      std::vector<std::size_t> chosen;
      for (int t = 0; t < k * 12 && static_cast<int>(chosen.size()) < k; ++t) {
        std::size_t f = rng.index(files.size());
        if (files[f].package != pkg && rng.uniform() < 0.8) continue;
        if (cfg.churn_persistence > 0 && rng.uniform() > std::exp(cfg.churn_persistence * (files[f].churn - 2.0))) continue;
        if (std::find(chosen.begin(), chosen.end(), f) == chosen.end()) chosen.push_back(f);
      }
      if (chosen.empty()) chosen.push_back(rng.index(files.size()));
      for (auto f : chosen) {
        FileChange ch;
        ch.path = files[f].path;
        ch.canonical_id = files[f].path;
        if (!files[f].created) {
          files[f].created = true;
          ch.kind = ChangeKind::add;
          ch.lines_added = static_cast<long long>(files[f].size);
        } else {
          ch.kind = ChangeKind::modify;
          const double hot = cfg.churn_persistence * files[f].churn;
          ch.lines_added = static_cast<long long>(std::floor(std::exp(2.0 + hot + 1.0 * rng.normal())));
          ch.lines_deleted = static_cast<long long>(std::min(size[f], std::floor(std::exp(1.5 + hot + 1.0 * rng.normal()))));
        }
        commit.changes.push_back(ch);
      }
      auto produced = miner.process(commit, r);
      for (std::size_t i = 0; i < produced.size(); ++i) {
        const std::size_t f = chosen[i];
        size[f] = std::max(0.0, size[f] + static_cast<double>(commit.changes[i].lines_added - commit.changes[i].lines_deleted));
        rows.push_back(std::move(produced[i]));
        row_file.push_back(f);
        row_size_after.push_back(size[f]);
      }
    }
  }

  // Planted risk: percentile ranks of the informative metrics.
  const auto& pnames = process_metric_names();
  auto column = [&](const std::string& metric) {
    auto it = std::find(pnames.begin(), pnames.end(), metric);
    if (it == pnames.end()) throw ConfigError("unknown process metric '" + metric + "'");
    const auto j = static_cast<std::size_t>(it - pnames.begin());
    std::vector<double> v;
    for (const auto& row : rows) v.push_back(row.values()[j]);
    return v;
  };
  auto signal = [&](const std::vector<std::string>& metrics) {
    std::vector<double> z(rows.size(), 0.0);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      auto v = column(metrics[m]);
      auto sorted = v;
      std::sort(sorted.begin(), sorted.end());
      const double weight = 1.0 / static_cast<double>(m + 1);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double u = percentile_rank(sorted, v[i]);
        const double linear = 2.0 * (u - 0.5);
        const double ushape = 4.0 * std::abs(u - 0.5) - 1.0;
        z[i] += weight * ((1.0 - cfg.nonlinear) * linear + cfg.nonlinear * ushape);
      }
    }
    return z;
  };
  const auto base = signal(cfg.informative);
  const auto alternate = cfg.drift > 0 ? signal(cfg.drift_informative) : base;

  std::vector<double> risk(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = cfg.releases > 1 ? static_cast<double>(rows[i].release_index - 1) / (cfg.releases - 1) : 0.0;
    const double shift = cfg.drift * t * t * t;
    const auto& f = files[row_file[i]];
    const double proc = (1.0 - shift) * base[i] + shift * alternate[i];
    risk[i] = cfg.process_signal * proc + cfg.product_signal * f.complexity +
              0.3 * f.risk + cfg.noise * rng.normal();
  }
  std::vector<double> sorted_risk = risk;
  const double cut = quantile(sorted_risk, 1.0 - cfg.defect_rate);

  Dataset d;
  d.mode = Mode::combined;
  d.granularity = Granularity::file;
  d.level = LabelLevel::jit;
  d.feature_names = pnames;
  const auto& cnames = product_metric_names();
  d.feature_names.insert(d.feature_names.end(), cnames.begin(), cnames.end());
  const double drift_noise = 1.0 - std::clamp(cfg.stagnation, 0.0, 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = files[row_file[i]];
    std::vector<double> x = rows[i].values();
    const double loc = std::max(1.0, std::round(0.8 * row_size_after[i]));
    for (const auto& n : cnames) {
      const double wobble = drift_noise > 0 ? std::exp(drift_noise * 0.5 * rng.normal()) : 1.0;
      double v = 0;
      switch (group_of(n)) {
        case TraitGroup::size: v = loc * (n.rfind("Avg", 0) == 0 ? 0.1 : 1.0) * wobble; break;
        case TraitGroup::complexity: v = std::exp(1.0 + 0.6 * f.complexity) * (n.rfind("Sum", 0) == 0 ? 6.0 : 1.0) * wobble; break;
        case TraitGroup::coupling: v = std::exp(1.2 + 0.5 * f.coupling) * wobble; break;
        case TraitGroup::comment: v = f.comments * (n == "RatioCommentToCode" ? 1.0 : loc) * wobble; break;
      }
      if (n == "CountLineCode") v = loc;
      if (n != "RatioCommentToCode" && n.rfind("Avg", 0) != 0) v = std::round(v);
      x.push_back(v);
    }
    d.X.push_back(std::move(x));
    d.y.push_back(risk[i] >= cut ? 1 : 0);
    d.effort.push_back(loc);
    d.meta.push_back({name, rows[i].canonical_id, rows[i].release_index, rows[i].commit_hash, false});
  }
  return d;
}

std::vector<Dataset> generate_corpus(const CorpusConfig& config) {
  if (config.projects < 1) throw ConfigError("corpus needs at least one project");
  static const std::vector<std::string> pool = {"la", "ld", "ddev", "nuc", "exp", "age", "nadev", "own", "sctr", "ns"};
  std::vector<Dataset> out;
  for (int p = 0; p < config.projects; ++p) {
    SyntheticConfig cfg = config.base;
    cfg.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(p)});
    if (config.heterogeneous) {
      Rng rng(derive_seed(cfg.seed, {0xfeedULL}));
      auto metrics = pool;
      rng.shuffle(metrics.begin(), metrics.end());
      cfg.informative.assign(metrics.begin(), metrics.begin() + 3);
      cfg.nonlinear = rng.uniform();
    }
    out.push_back(generate_project(cfg, fmt::format("synth{:02d}", p + 1)));
  }
  return out;
}

CorpusConfig shipped_corpus_config() {
  CorpusConfig c;
  c.base.files = 80;
  c.base.commits_per_release = 50;
  return c;
}

}  // namespace defectlab
