#include "defectlab/labeling.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/git.hpp"
#include "defectlab/tokenizer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace defectlab {

struct GitBlameProvider::Impl {
  const GitRepo& repo;
  ObjectReader reader;
  explicit Impl(const GitRepo& r) : repo(r), reader(r) {}
};

GitBlameProvider::GitBlameProvider(const GitRepo& repo) : impl_(std::make_unique<Impl>(repo)) {}
GitBlameProvider::~GitBlameProvider() = default;

std::vector<BlameRecord> GitBlameProvider::trace(const std::string& fix, const std::string& parent,
                                                 const std::string& old_path,
                                                 const std::string& new_path) {
  std::vector<std::string> diff_args = {"diff", "-U0", "--no-color", "--no-ext-diff", "-M",
                                        parent, fix, "--", old_path};
  if (new_path != old_path) diff_args.push_back(new_path);
  auto diff = impl_->repo.try_run(diff_args);
  if (diff.exit_code != 0) throw LabelingError(old_path, fix, diff.err);

  std::vector<int> deleted;
  std::vector<std::string> blame_args = {"blame", "--porcelain"};
  for (const auto& h : parse_hunks(diff.out)) {
    if (h.old_count <= 0) continue;
    for (int l = h.old_start; l < h.old_start + h.old_count; ++l) deleted.push_back(l);
    blame_args.push_back("-L");
    blame_args.push_back(std::to_string(h.old_start) + "," +
                         std::to_string(h.old_start + h.old_count - 1));
  }
  if (deleted.empty()) return {};

  const auto content = impl_->reader.read(parent, old_path);
  if (!content) throw LabelingError(old_path, fix, "file absent at parent " + parent);
  const auto classes = classify_lines(tokenize(*content));

  blame_args.push_back(parent);
  blame_args.push_back("--");
  blame_args.push_back(old_path);
  auto blame = impl_->repo.try_run(blame_args);
  if (blame.exit_code != 0) throw LabelingError(old_path, fix, blame.err);

  std::map<int, std::string> origin;
  for (const auto& bl : parse_porcelain_blame(blame.out)) origin[bl.line] = bl.origin;

  std::vector<BlameRecord> out;
  for (int l : deleted) {
    auto it = origin.find(l);
    if (it == origin.end()) throw LabelingError(old_path, fix, "no blame for line " + std::to_string(l));
    const auto idx = static_cast<std::size_t>(l - 1);
    const bool code = idx < classes.size() && classes[idx].code;
    out.push_back({old_path, parent, l, it->second, fix, code});
  }
  return out;
}

BlameFileProvider::BlameFileProvider(std::istream& in) { load(in); }

BlameFileProvider::BlameFileProvider(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open blame file " + path);
  load(in);
}

void BlameFileProvider::load(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      BlameRecord r;
      r.file = j.at("file").get<std::string>();
      r.at_commit = j.at("at_commit").get<std::string>();
      r.line_number = j.at("line_number").get<int>();
      r.origin_hash = j.at("origin_hash").get<std::string>();
      r.fix = j.value("fix", std::string{});
      r.code = j.value("code", true);
      records_[{r.fix, r.file}].push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
}

std::vector<BlameRecord> BlameFileProvider::trace(const std::string& fix, const std::string& parent,
                                                  const std::string& old_path,
                                                  const std::string&) {
  auto it = records_.find({fix, old_path});
  if (it == records_.end()) return {};
  std::vector<BlameRecord> out;
  for (const auto& r : it->second)
    if (r.at_commit == parent) out.push_back(r);
  return out;
}

std::vector<BlameRecord> RecordingBlameProvider::trace(const std::string& fix,
                                                       const std::string& parent,
                                                       const std::string& old_path,
                                                       const std::string& new_path) {
  auto out = inner_.trace(fix, parent, old_path, new_path);
  records_.insert(records_.end(), out.begin(), out.end());
  return out;
}

void write_blame_records(std::ostream& out, const std::vector<BlameRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["file"] = r.file;
    j["at_commit"] = r.at_commit;
    j["line_number"] = r.line_number;
    j["origin_hash"] = r.origin_hash;
    j["fix"] = r.fix;
    j["code"] = r.code;
    out << j.dump() << '\n';
  }
}

bool has_tracked_extension(const std::string& path, const std::vector<std::string>& extensions) {
  return std::any_of(extensions.begin(), extensions.end(), [&](const std::string& ext) {
    return path.size() >= ext.size() &&
           path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
  });
}

const std::vector<std::string>& default_fix_keywords() {
  static const std::vector<std::string> k = {"bug",   "fix",    "fixes", "fixed",   "fixing",
                                             "defect", "error", "fail",  "failure", "patch"};
  return k;
}

std::vector<std::string> load_keywords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open keyword file " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string word;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c)))
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (!word.empty()) out.push_back(word);
  }
  if (out.empty()) throw ConfigError("keyword file " + path + " is empty");
  return out;
}

namespace {

bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> match_message(const std::string& message,
                                       const std::vector<std::string>& keywords) {
  std::string lower(message.size(), ' ');
  std::transform(message.begin(), message.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::set<std::string> words;
  std::string cur;
  for (char c : lower) {
    if (alnum(c)) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      words.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.insert(cur);

  std::vector<std::string> matched;
  for (const auto& k : keywords) {
    std::string key(k.size(), ' ');
    std::transform(k.begin(), k.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (words.count(key) && std::find(matched.begin(), matched.end(), key) == matched.end())
      matched.push_back(key);
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] != '#' || (i > 0 && alnum(lower[i - 1]))) continue;
    std::size_t j = i + 1;
    while (j < lower.size() && std::isdigit(static_cast<unsigned char>(lower[j]))) ++j;
    if (j > i + 1) {
      std::string ref = lower.substr(i, j - i);
      if (std::find(matched.begin(), matched.end(), ref) == matched.end()) matched.push_back(ref);
    }
  }
  return matched;
}

}  // namespace

std::vector<FixCommit> identify_fix_commits(const ProjectHistory& history,
                                            const std::vector<std::string>& keywords,
                                            const LabelingOptions& options) {
  if (keywords.empty()) throw ConfigError("keyword set is empty");
  std::vector<FixCommit> fixes;
  for (const auto& c : history.commits) {
    if (c.is_merge()) continue;
    auto matched = match_message(c.message, keywords);
    if (matched.empty()) continue;
    FixCommit f{c.hash, std::move(matched), {}};
    for (const auto& ch : c.changes)
      if (has_tracked_extension(ch.path, options.extensions) ||
          (!ch.old_path.empty() && has_tracked_extension(ch.old_path, options.extensions)))
        f.fixed_files.push_back(ch.canonical_id);
    fixes.push_back(std::move(f));
  }
  return fixes;
}

std::vector<InducingLabel> szz_trace(const FixCommit& fix, const ProjectHistory& history,
                                     BlameProvider& blame, const LabelingOptions& options,
                                     std::vector<std::string>* warnings) {
  const Commit* c = history.find(fix.hash);
  if (!c) throw ConfigError("fix commit " + fix.hash + " is not in the history");
  if (c->parents.empty()) {
    if (warnings) warnings->push_back("fix " + fix.hash + " is a root commit; skipped");
    return {};
  }
  const std::string& parent = c->parents.front();
  std::vector<InducingLabel> labels;
  for (const auto& ch : c->changes) {
    if (ch.kind == ChangeKind::add || ch.binary || ch.lines_deleted == 0) continue;
    const std::string& old_path = ch.kind == ChangeKind::rename ? ch.old_path : ch.path;
    if (!has_tracked_extension(old_path, options.extensions) &&
        !has_tracked_extension(ch.path, options.extensions))
      continue;
    std::map<std::string, int> evidence;
    for (const auto& r : blame.trace(fix.hash, parent, old_path, ch.path)) {
      if (options.line_filter && !r.code) continue;
      ++evidence[r.origin_hash];
    }
    for (const auto& [origin, n] : evidence) labels.push_back({origin, ch.canonical_id, fix.hash, n});
  }
  // Deterministic: history order of the inducing commit, then file.
  auto pos = [&](const std::string& h) {
    auto p = history.position(h);
    return p ? *p : history.commits.size();
  };
  std::sort(labels.begin(), labels.end(), [&](const InducingLabel& a, const InducingLabel& b) {
    const auto pa = pos(a.inducing_hash), pb = pos(b.inducing_hash);
    if (pa != pb) return pa < pb;
    if (a.inducing_hash != b.inducing_hash) return a.inducing_hash < b.inducing_hash;
    return a.canonical_id < b.canonical_id;
  });
  return labels;
}

std::vector<InducingLabel> label_history(const ProjectHistory& history, BlameProvider& blame,
                                         const std::vector<std::string>& keywords,
                                         const LabelingOptions& options,
                                         std::vector<std::string>* warnings) {
  std::vector<InducingLabel> all;
  for (const auto& fix : identify_fix_commits(history, keywords, options)) {
    auto labels = szz_trace(fix, history, blame, options, warnings);
    all.insert(all.end(), labels.begin(), labels.end());
  }
  return all;
}

std::map<std::pair<std::string, std::string>, bool> label_rows(
    const std::vector<InducingLabel>& labels, const ProjectHistory& history, LabelLevel level,
    const LabelingOptions& options) {
  std::map<std::pair<std::string, std::string>, bool> rows;
  auto period = [&](const std::string& hash) {
    return level == LabelLevel::jit ? hash : std::to_string(history.release_of(hash));
  };
  for (const auto& c : history.commits) {
    if (c.is_merge()) continue;
    for (const auto& ch : c.changes)
      if (has_tracked_extension(ch.path, options.extensions))
        rows.emplace(std::make_pair(ch.canonical_id, period(c.hash)), false);
  }
  for (const auto& l : labels) {
    auto it = rows.find({l.canonical_id, period(l.inducing_hash)});
    if (it != rows.end()) it->second = true;
  }
  return rows;
}

int count_defective_commits(const std::vector<InducingLabel>& labels) {
  std::set<std::string> commits;
  for (const auto& l : labels) commits.insert(l.inducing_hash);
  return static_cast<int>(commits.size());
}

void write_labels_csv(std::ostream& out, const std::vector<InducingLabel>& labels) {
  out << "inducing_hash,canonical_id,fix_hash,line_evidence\n";
  for (const auto& l : labels)
    csv::write_row(out, {l.inducing_hash, l.canonical_id, l.fix_hash, std::to_string(l.line_evidence)});
}

std::vector<InducingLabel> read_labels_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto a = t.require("inducing_hash"), b = t.require("canonical_id"),
             c = t.require("fix_hash"), d = t.require("line_evidence");
  std::vector<InducingLabel> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.push_back({row[a], row[b], row[c], static_cast<int>(csv::parse_int(row[d], r + 2))});
  }
  return out;
}

std::vector<InducingLabel> load_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labels file " + path);
  return read_labels_csv(in);
}

}  // namespace defectlab
