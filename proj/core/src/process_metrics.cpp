#include "defectlab/process_metrics.hpp"

#include "defectlab/csv.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace defectlab {

const std::vector<std::string>& process_metric_names() {
  static const std::vector<std::string> names = {
      "la",    "ld",        "lt",        "age",       "adev", "ddev", "nuc",
      "own",   "minor",     "nddev",     "ncomm",     "nadev", "avg_nddev", "avg_nadev",
      "avg_ncomm", "ns",    "nd",        "exp",       "rexp", "sexp", "sctr"};
  return names;
}

std::vector<double> ProcessRow::values() const {
  return {la,    ld,    lt,    age,   adev,      ddev,      nuc,
          own,   minor, nddev, ncomm, nadev,     avg_nddev, avg_nadev,
          avg_ncomm, ns, nd,  exp,   rexp,      sexp,      sctr};
}

std::string subsystem_of(const std::string& path) {
  const auto slash = path.find('/');
  return slash == std::string::npos ? std::string{} : path.substr(0, slash);
}

std::string directory_of(const std::string& path) {
  const auto slash = path.rfind('/');
  return slash == std::string::npos ? std::string{} : path.substr(0, slash);
}

ProcessMiner::ProcessMiner(LabelingOptions options) : options_(std::move(options)) {}

double ProcessMiner::active_devs(const std::string& canonical_id, int release) const {
  auto it = release_authors_.find({release, canonical_id});
  return it == release_authors_.end() ? 0.0 : static_cast<double>(it->second.size());
}

Neighborhood ProcessMiner::neighborhood(const std::string& canonical_id, int release) const {
  Neighborhood n;
  auto it = files_.find(canonical_id);
  if (it == files_.end()) return n;
  const FileState& f = it->second;
  n.neighbors.assign(f.neighbors.begin(), f.neighbors.end());

  mark_.resize(commits_.size(), 0);
  ++stamp_;
  std::set<std::string> all_authors, release_authors;
  auto visit = [&](const FileState& s) {
    for (auto c : s.commits) {
      if (mark_[c] == stamp_) continue;
      mark_[c] = stamp_;
      n.ncomm += 1;
      all_authors.insert(commits_[c].author);
      if (commits_[c].release == release) release_authors.insert(commits_[c].author);
    }
  };
  visit(f);
  for (const auto& g : f.neighbors) {
    const FileState& s = files_.at(g);
    visit(s);
    n.avg_nddev += static_cast<double>(s.authors.size());
    n.avg_nadev += active_devs(g, release);
    n.avg_ncomm += static_cast<double>(s.commits.size());
  }
  n.nddev = static_cast<double>(all_authors.size());
  n.nadev = static_cast<double>(release_authors.size());
  if (!f.neighbors.empty()) {
    const auto k = static_cast<double>(f.neighbors.size());
    n.avg_nddev /= k;
    n.avg_nadev /= k;
    n.avg_ncomm /= k;
  }
  return n;
}

Experience ProcessMiner::experience(const std::string& author, const std::string& subsystem,
                                    std::int64_t now) const {
  Experience e;
  auto it = authors_.find(author);
  if (it == authors_.end()) return e;
  const AuthorState& a = it->second;
  e.exp = static_cast<double>(a.times.size());
  for (auto t : a.times) {
    const double years = std::max<double>(0.0, static_cast<double>(now - t)) / (365.25 * 86400.0);
    e.rexp += 1.0 / (years + 1.0);
  }
  if (auto s = a.subsystem_commits.find(subsystem); s != a.subsystem_commits.end())
    e.sexp = s->second;
  return e;
}

std::vector<ProcessRow> ProcessMiner::process(const Commit& commit, int release) {
  if (commit.is_merge()) return {};

  std::vector<const FileChange*> tracked;
  for (const auto& ch : commit.changes)
    if (has_tracked_extension(ch.path, options_.extensions)) tracked.push_back(&ch);

  std::set<std::string> subsystems, directories;
  double churn_total = 0;
  for (const auto* ch : tracked) {
    subsystems.insert(subsystem_of(ch->path));
    directories.insert(directory_of(ch->path));
    churn_total += static_cast<double>(ch->lines_added + ch->lines_deleted);
  }
  double sctr = 0;
  if (tracked.size() > 1 && churn_total > 0) {
    double h = 0;
    for (const auto* ch : tracked) {
      const double p = static_cast<double>(ch->lines_added + ch->lines_deleted) / churn_total;
      if (p > 0) h -= p * std::log(p);
    }
    sctr = -h / std::log(static_cast<double>(tracked.size()));
    if (sctr == 0) sctr = 0;  // no negative zero in output
  }

  std::vector<ProcessRow> rows;
  rows.reserve(tracked.size());
  for (const auto* ch : tracked) {
    ProcessRow r;
    r.canonical_id = ch->canonical_id;
    r.commit_hash = commit.hash;
    r.release_index = release;
    r.binary = ch->binary;
    r.la = static_cast<double>(ch->lines_added);
    r.ld = static_cast<double>(ch->lines_deleted);
    r.ns = static_cast<double>(subsystems.size());
    r.nd = static_cast<double>(directories.size());
    r.sctr = sctr;

    auto it = files_.find(ch->canonical_id);
    if (it != files_.end()) {
      const FileState& f = it->second;
      r.lt = f.size;
      r.age = std::max<double>(0.0, static_cast<double>(commit.timestamp - f.last_change)) / 86400.0;
      r.ddev = static_cast<double>(f.authors.size());
      r.nuc = static_cast<double>(f.commits.size());
      double total = 0, best = 0;
      for (const auto& [who, n] : f.added_by) total += n;
      if (total > 0) {
        for (const auto& [who, n] : f.added_by) {
          const double share = n / total;
          best = std::max(best, share);
          if (share > 0 && share < 0.05) r.minor += 1;
        }
        r.own = best;
      }
    }
    {
      auto ra = release_authors_.find({release, ch->canonical_id});
      std::size_t n = ra == release_authors_.end() ? 0 : ra->second.size();
      if (ra == release_authors_.end() || !ra->second.count(commit.author)) ++n;
      r.adev = static_cast<double>(n);
    }
    const Neighborhood nb = neighborhood(ch->canonical_id, release);
    r.nddev = nb.nddev;
    r.ncomm = nb.ncomm;
    r.nadev = nb.nadev;
    r.avg_nddev = nb.avg_nddev;
    r.avg_nadev = nb.avg_nadev;
    r.avg_ncomm = nb.avg_ncomm;
    const Experience ex = experience(commit.author, subsystem_of(ch->path), commit.timestamp);
    r.exp = ex.exp;
    r.rexp = ex.rexp;
    r.sexp = ex.sexp;
    rows.push_back(std::move(r));
  }

  // Fold the commit into the state.
  const std::size_t index = commits_.size();
  commits_.push_back({commit.author, release});
  for (const auto* ch : tracked) {
    FileState& f = files_[ch->canonical_id];
    f.last_change = commit.timestamp;
    f.size = std::max(0.0, f.size + static_cast<double>(ch->lines_added - ch->lines_deleted));
    f.added_by[commit.author] += static_cast<double>(ch->lines_added);
    f.authors.insert(commit.author);
    f.commits.push_back(index);
    release_authors_[{release, ch->canonical_id}].insert(commit.author);
  }
  for (const auto* a : tracked)
    for (const auto* b : tracked)
      if (a->canonical_id != b->canonical_id) files_[a->canonical_id].neighbors.insert(b->canonical_id);

  AuthorState& author = authors_[commit.author];
  author.times.push_back(commit.timestamp);
  std::set<std::string> touched;
  for (const auto& ch : commit.changes) {
    touched.insert(subsystem_of(ch.path));
    if (!ch.old_path.empty()) touched.insert(subsystem_of(ch.old_path));
  }
  for (const auto& s : touched) ++author.subsystem_commits[s];
  return rows;
}

std::vector<ProcessRow> compute_process_rows(const ProjectHistory& history,
                                             const std::vector<InducingLabel>& labels,
                                             const LabelingOptions& options) {
  const auto defective = label_rows(labels, history, LabelLevel::jit, options);
  ProcessMiner miner(options);
  std::vector<ProcessRow> out;
  for (const auto& c : history.commits) {
    auto rows = miner.process(c, history.release_of(c.hash));
    for (auto& r : rows) {
      auto it = defective.find({r.canonical_id, r.commit_hash});
      r.defective = it != defective.end() && it->second;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void write_process_csv(std::ostream& out, const std::vector<ProcessRow>& rows) {
  std::vector<std::string> header = {"file", "commit", "release"};
  for (const auto& n : process_metric_names()) header.push_back(n);
  header.push_back("defective");
  csv::write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.canonical_id, r.commit_hash, std::to_string(r.release_index)};
    for (double v : r.values()) cells.push_back(csv::format_number(v));
    cells.push_back(r.defective ? "1" : "0");
    csv::write_row(out, cells);
  }
}

std::vector<ProcessRow> read_process_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto file = t.require("file"), commit = t.require("commit"), release = t.require("release"),
             defective = t.require("defective");
  std::vector<std::size_t> cols;
  for (const auto& n : process_metric_names()) cols.push_back(t.require(n));
  std::vector<ProcessRow> rows;
  rows.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    ProcessRow r;
    r.canonical_id = row[file];
    r.commit_hash = row[commit];
    r.release_index = static_cast<int>(csv::parse_int(row[release], line));
    double* fields[] = {&r.la,    &r.ld,    &r.lt,    &r.age,       &r.adev,      &r.ddev,
                        &r.nuc,   &r.own,   &r.minor, &r.nddev,     &r.ncomm,     &r.nadev,
                        &r.avg_nddev, &r.avg_nadev, &r.avg_ncomm, &r.ns,  &r.nd,  &r.exp,
                        &r.rexp,  &r.sexp,  &r.sctr};
    for (std::size_t k = 0; k < cols.size(); ++k) *fields[k] = csv::parse_double(row[cols[k]], line);
    r.defective = csv::parse_int(row[defective], line) != 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace defectlab
