#include "defectlab/mining.hpp"

#include "defectlab/csv.hpp"
#include "defectlab/errors.hpp"
#include "defectlab/git.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace defectlab {

using ojson = nlohmann::ordered_json;

const char* to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::add: return "add";
    case ChangeKind::modify: return "modify";
    case ChangeKind::remove: return "delete";
    case ChangeKind::rename: return "rename";
  }
  return "modify";
}

ChangeKind change_kind_from_string(const std::string& s) {
  if (s == "add") return ChangeKind::add;
  if (s == "modify") return ChangeKind::modify;
  if (s == "delete") return ChangeKind::remove;
  if (s == "rename") return ChangeKind::rename;
  throw ConfigError("unknown change kind '" + s + "'");
}

std::optional<std::size_t> ProjectHistory::position(const std::string& hash) const {
  auto it = index_.find(hash);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Commit* ProjectHistory::find(const std::string& hash) const {
  auto p = position(hash);
  return p ? &commits[*p] : nullptr;
}

int ProjectHistory::release_of(const std::string& hash) const {
  auto it = commit_release.find(hash);
  return it == commit_release.end() ? 1 : it->second;
}

void ProjectHistory::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < commits.size(); ++i) index_[commits[i].hash] = i;
}

std::string normalize_author(const std::string& email, const std::string& name) {
  std::string id = email.empty() ? name : email;
  std::transform(id.begin(), id.end(), id.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return id;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

std::string rtrim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

struct NumstatEntry {
  long long added = 0;
  long long deleted = 0;
  bool binary = false;
};

long long to_count(std::string_view s) {
  long long v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

void parse_changes(std::string_view body, Commit& commit) {
  auto tokens = split(body, '\0');
  std::map<std::string, NumstatEntry> numstat;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string_view t = tokens[i];
    while (!t.empty() && t.front() == '\n') t.remove_prefix(1);
    if (t.empty()) continue;
    if (t.front() == ':') {
      const auto fields = split(t, ' ');
      const std::string_view status = fields.back();
      FileChange ch;
      if (!status.empty() && (status.front() == 'R' || status.front() == 'C')) {
        if (i + 2 >= tokens.size()) break;
        ch.old_path = std::string(tokens[i + 1]);
        ch.path = std::string(tokens[i + 2]);
        ch.kind = ChangeKind::rename;
        i += 2;
      } else {
        if (i + 1 >= tokens.size()) break;
        ch.path = std::string(tokens[i + 1]);
        ++i;
        switch (status.empty() ? 'M' : status.front()) {
          case 'A': ch.kind = ChangeKind::add; break;
          case 'D': ch.kind = ChangeKind::remove; break;
          default: ch.kind = ChangeKind::modify; break;
        }
      }
      commit.changes.push_back(std::move(ch));
      continue;
    }
    const auto parts = split(t, '\t');
    if (parts.size() < 3) continue;
    NumstatEntry e;
    e.binary = parts[0] == "-" || parts[1] == "-";
    if (!e.binary) {
      e.added = to_count(parts[0]);
      e.deleted = to_count(parts[1]);
    }
    std::string path(parts[2]);
    if (path.empty()) {  // rename: old and new follow as separate tokens
      if (i + 2 >= tokens.size()) break;
      path = std::string(tokens[i + 2]);
      i += 2;
    }
    numstat[path] = e;
  }
  for (auto& ch : commit.changes) {
    auto it = numstat.find(ch.path);
    if (it == numstat.end()) continue;
    ch.binary = it->second.binary;
    ch.lines_added = it->second.added;
    ch.lines_deleted = it->second.deleted;
  }
}

}  // namespace

std::vector<Commit> read_git_history(const GitRepo& repo) {
  if (!repo.has_commits()) {
    // Distinguish "not a repository" from "no commits yet".
    auto probe = repo.try_run({"rev-parse", "--git-dir"});
    if (probe.exit_code != 0) throw MiningError("not a git repository: " + repo.path(), probe.err);
    return {};
  }
  const std::string out =
      repo.run({"log", "HEAD", "--format=%x01%H%x1f%P%x1f%ae%x1f%an%x1f%at%x1f%B%x02", "--raw",
                "--numstat", "-z", "-M", "--no-color", "--no-ext-diff", "--diff-merges=off"});
  std::vector<Commit> commits;
  for (std::string_view record : split(out, '\x01')) {
    if (record.empty()) continue;
    const auto end_header = record.find('\x02');
    if (end_header == std::string_view::npos) throw MiningError("unexpected git log output");
    const auto fields = split(record.substr(0, end_header), '\x1f');
    if (fields.size() < 6) throw MiningError("unexpected git log header");
    Commit c;
    c.hash = std::string(fields[0]);
    for (auto p : split(fields[1], ' '))
      if (!p.empty()) c.parents.emplace_back(p);
    c.author = normalize_author(std::string(fields[2]), std::string(fields[3]));
    c.timestamp = to_count(fields[4]);
    std::string message(fields[5]);
    for (std::size_t k = 6; k < fields.size(); ++k) message += "\x1f" + std::string(fields[k]);
    c.message = rtrim(std::move(message));
    parse_changes(record.substr(end_header + 1), c);
    commits.push_back(std::move(c));
  }
  return commits;
}

void sort_commits(std::vector<Commit>& commits) {
  std::sort(commits.begin(), commits.end(), [](const Commit& a, const Commit& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.hash < b.hash;
  });
  // Within a run of equal timestamps, emit parents first (smallest hash wins among ready ones).
  std::size_t start = 0;
  while (start < commits.size()) {
    std::size_t end = start;
    while (end < commits.size() && commits[end].timestamp == commits[start].timestamp) ++end;
    if (end - start > 1) {
      std::map<std::string, std::size_t> in_run;
      for (std::size_t i = start; i < end; ++i) in_run[commits[i].hash] = i;
      std::map<std::size_t, int> pending;
      std::map<std::size_t, std::vector<std::size_t>> children;
      for (std::size_t i = start; i < end; ++i) {
        pending[i] = 0;
        for (const auto& p : commits[i].parents) {
          auto it = in_run.find(p);
          if (it != in_run.end() && it->second != i) {
            ++pending[i];
            children[it->second].push_back(i);
          }
        }
      }
      std::set<std::pair<std::string, std::size_t>> ready;
      for (auto& [i, n] : pending)
        if (n == 0) ready.insert({commits[i].hash, i});
      std::vector<Commit> ordered;
      while (!ready.empty()) {
        auto [h, i] = *ready.begin();
        ready.erase(ready.begin());
        ordered.push_back(commits[i]);
        for (auto c : children[i])
          if (--pending[c] == 0) ready.insert({commits[c].hash, c});
      }
      if (ordered.size() == end - start)  // a cycle is impossible in git; guard anyway
        std::move(ordered.begin(), ordered.end(), commits.begin() + static_cast<long>(start));
    }
    start = end;
  }
}

void assign_canonical_ids(std::vector<Commit>& commits) {
  std::map<std::string, std::string> live;     // current path -> id
  std::map<std::string, int> creations;        // path -> times created
  auto create = [&](const std::string& path) {
    const int n = ++creations[path];
    std::string id = n == 1 ? path : path + "@" + std::to_string(n);
    live[path] = id;
    return id;
  };
  auto lookup = [&](const std::string& path) {
    auto it = live.find(path);
    return it != live.end() ? it->second : create(path);
  };
  for (auto& c : commits) {
    if (c.is_merge()) continue;
    // Deletions and renames free their paths before additions claim them.
    for (int pass = 0; pass < 3; ++pass) {
      for (auto& ch : c.changes) {
        const bool first = ch.kind == ChangeKind::remove || ch.kind == ChangeKind::rename;
        const bool second = ch.kind == ChangeKind::modify;
        if ((pass == 0 && !first) || (pass == 1 && !second) ||
            (pass == 2 && ch.kind != ChangeKind::add))
          continue;
        switch (ch.kind) {
          case ChangeKind::remove:
            ch.canonical_id = lookup(ch.path);
            live.erase(ch.path);
            break;
          case ChangeKind::rename: {
            ch.canonical_id = lookup(ch.old_path);
            live.erase(ch.old_path);
            live[ch.path] = ch.canonical_id;
            break;
          }
          case ChangeKind::modify:
            ch.canonical_id = lookup(ch.path);
            break;
          case ChangeKind::add: {
            auto it = live.find(ch.path);
            ch.canonical_id = it != live.end() ? it->second : create(ch.path);
            break;
          }
        }
      }
    }
  }
}

void write_dump(std::ostream& out, std::vector<Commit> commits) {
  sort_commits(commits);
  for (const auto& c : commits) {
    ojson j;
    j["hash"] = c.hash;
    j["parents"] = c.parents;
    j["author"] = c.author;
    j["timestamp"] = c.timestamp;
    j["message"] = c.message;
    j["changes"] = ojson::array();
    for (const auto& ch : c.changes) {
      ojson cj;
      cj["path"] = ch.path;
      if (ch.kind == ChangeKind::rename) cj["old_path"] = ch.old_path;
      cj["added"] = ch.lines_added;
      cj["deleted"] = ch.lines_deleted;
      cj["kind"] = to_string(ch.kind);
      cj["binary"] = ch.binary;
      j["changes"].push_back(std::move(cj));
    }
    out << j.dump(-1, ' ', false, ojson::error_handler_t::replace) << '\n';
  }
}

void dump_history(const std::string& repo_path, const std::string& out_path) {
  GitRepo repo(repo_path);
  auto commits = read_git_history(repo);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw MiningError("cannot write " + out_path);
  write_dump(out, std::move(commits));
}

namespace {

bool is_hex40(const std::string& s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

template <typename T>
T field(const nlohmann::json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(line, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(line, std::string("bad type for field '") + name + "'");
  }
}

}  // namespace

ProjectHistory parse_dump(std::istream& in) {
  ProjectHistory h;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "record is not an object");
    Commit c;
    c.hash = field<std::string>(j, "hash", lineno);
    if (!is_hex40(c.hash)) throw ParseError(lineno, "hash is not a 40-char hex id");
    if (!seen.insert(c.hash).second) throw ParseError(lineno, "duplicate hash " + c.hash);
    c.parents = field<std::vector<std::string>>(j, "parents", lineno);
    c.author = field<std::string>(j, "author", lineno);
    c.timestamp = field<std::int64_t>(j, "timestamp", lineno);
    if (c.timestamp < 0) throw ParseError(lineno, "negative timestamp");
    c.message = field<std::string>(j, "message", lineno);
    const auto changes = field<nlohmann::json>(j, "changes", lineno);
    if (!changes.is_array()) throw ParseError(lineno, "changes is not an array");
    for (const auto& cj : changes) {
      FileChange ch;
      ch.path = field<std::string>(cj, "path", lineno);
      ch.lines_added = field<long long>(cj, "added", lineno);
      ch.lines_deleted = field<long long>(cj, "deleted", lineno);
      if (ch.lines_added < 0 || ch.lines_deleted < 0) throw ParseError(lineno, "negative line count");
      try {
        ch.kind = change_kind_from_string(field<std::string>(cj, "kind", lineno));
      } catch (const ConfigError& e) {
        throw ParseError(lineno, e.what());
      }
      ch.binary = field<bool>(cj, "binary", lineno);
      if (ch.binary) ch.lines_added = ch.lines_deleted = 0;
      if (ch.kind == ChangeKind::rename) ch.old_path = field<std::string>(cj, "old_path", lineno);
      c.changes.push_back(std::move(ch));
    }
    h.commits.push_back(std::move(c));
  }
  sort_commits(h.commits);
  assign_canonical_ids(h.commits);
  h.reindex();
  return h;
}

ProjectHistory load_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dump " + path);
  return parse_dump(in);
}

std::int64_t parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3)
    throw ConfigError("bad ISO-8601 date '" + text + "'");
  std::size_t i = static_cast<std::size_t>(consumed);
  long offset = 0;
  if (i < text.size() && (text[i] == 'T' || text[i] == ' ')) {
    int n = 0;
    if (std::sscanf(text.c_str() + i + 1, "%2d:%2d%n", &hh, &mm, &n) != 2)
      throw ConfigError("bad ISO-8601 time '" + text + "'");
    i += 1 + static_cast<std::size_t>(n);
    if (i < text.size() && text[i] == ':') {
      if (std::sscanf(text.c_str() + i + 1, "%2d%n", &ss, &n) != 1)
        throw ConfigError("bad ISO-8601 seconds '" + text + "'");
      i += 1 + static_cast<std::size_t>(n);
      while (i < text.size() && (text[i] == '.' || std::isdigit(static_cast<unsigned char>(text[i]))))
        ++i;  // fractional seconds are dropped
    }
    if (i < text.size() && text[i] == 'Z') {
      ++i;
    } else if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      int oh = 0, om = 0;
      const int sign = text[i] == '-' ? -1 : 1;
      if (std::sscanf(text.c_str() + i + 1, "%2d:%2d", &oh, &om) != 2)
        throw ConfigError("bad ISO-8601 offset '" + text + "'");
      offset = sign * (oh * 3600L + om * 60L);
      i = text.size();
    }
  }
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i != text.size()) throw ConfigError("bad ISO-8601 value '" + text + "'");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ConfigError("invalid calendar date '" + text + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

std::string format_iso8601(std::int64_t seconds) {
  using namespace std::chrono;
  const auto day_count = static_cast<int>((seconds >= 0 ? seconds : seconds - 86399) / 86400);
  const sys_days days{std::chrono::days{day_count}};
  const year_month_day ymd{days};
  const std::int64_t rem = seconds - static_cast<std::int64_t>(day_count) * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

std::vector<Release> read_releases(std::istream& in) {
  const auto table = csv::read(in);
  const auto tag_col = table.require("tag");
  const auto date_col = table.require("date");
  std::vector<Release> releases;
  for (const auto& row : table.rows) releases.push_back({row[tag_col], parse_iso8601(row[date_col]), 0});
  std::stable_sort(releases.begin(), releases.end(),
                   [](const Release& a, const Release& b) { return a.date < b.date; });
  for (std::size_t i = 0; i < releases.size(); ++i) {
    if (i > 0 && releases[i].date == releases[i - 1].date)
      throw ConfigError("releases " + releases[i - 1].tag + " and " + releases[i].tag +
                        " share a date");
    releases[i].index = static_cast<int>(i + 1);
  }
  return releases;
}

std::vector<Release> load_releases(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open releases file " + path);
  return read_releases(in);
}

void write_releases(std::ostream& out, const std::vector<Release>& releases) {
  out << "tag,date\n";
  for (const auto& r : releases) csv::write_row(out, {r.tag, format_iso8601(r.date)});
}

std::vector<Release> releases_from_tags(const GitRepo& repo) {
  const std::string out = repo.run(
      {"for-each-ref", "--sort=creatordate", "--format=%(refname:short)%1f%(creatordate:unix)",
       "refs/tags"});
  std::vector<Release> releases;
  std::istringstream lines(out);
  std::string line;
  while (std::getline(lines, line)) {
    const auto sep = line.find('\x1f');
    if (sep == std::string::npos) continue;
    const std::int64_t date = to_count(std::string_view(line).substr(sep + 1));
    if (!releases.empty() && releases.back().date >= date) continue;  // first tag per instant wins
    releases.push_back({line.substr(0, sep), date, static_cast<int>(releases.size() + 1)});
  }
  return releases;
}

std::unordered_map<std::string, int> assign_releases(const std::vector<Commit>& commits,
                                                     const std::vector<Release>& releases) {
  if (releases.empty()) throw ConfigError("at least one release is required");
  std::unordered_map<std::string, int> out;
  for (const auto& c : commits) {
    if (c.is_merge()) continue;
    auto it = std::lower_bound(releases.begin(), releases.end(), c.timestamp,
                               [](const Release& r, std::int64_t t) { return r.date < t; });
    out[c.hash] = it == releases.end() ? releases.back().index : it->index;
  }
  return out;
}

ProjectMetadata load_project_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metadata file " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    return {j.at("pull_requests").get<long long>(), j.at("issues").get<long long>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad metadata file " + path + ": " + e.what());
  }
}

bool ValidationReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::fail; });
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (c.status == CheckStatus::fail) out.push_back(c.name);
  return out;
}

int ValidationReport::unchecked() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) {
    return c.status == CheckStatus::unchecked;
  }));
}

ValidationReport validate_project(const ProjectHistory& history,
                                  const ValidationThresholds& t,
                                  std::optional<int> defective_commits,
                                  std::optional<ProjectMetadata> metadata) {
  ValidationReport report;
  auto add = [&](std::string name, bool ok, std::string detail) {
    report.checks.push_back({std::move(name), ok ? CheckStatus::pass : CheckStatus::fail,
                             std::move(detail)});
  };
  long long n = 0;
  std::int64_t first = 0, last = 0;
  std::set<std::string> authors;
  for (const auto& c : history.commits) {
    if (c.is_merge()) continue;
    if (n == 0) first = last = c.timestamp;
    first = std::min(first, c.timestamp);
    last = std::max(last, c.timestamp);
    authors.insert(c.author);
    ++n;
  }
  add("Commits", n > t.min_commits_exclusive, std::to_string(n) + " non-merge commits");
  const double weeks = static_cast<double>(last - first) / (7.0 * 86400.0);
  add("Duration", weeks >= t.min_duration_weeks, std::to_string(weeks) + " weeks");
  add("Contributors", static_cast<int>(authors.size()) >= t.min_contributors,
      std::to_string(authors.size()) + " distinct authors");
  if (defective_commits) {
    add("Defective Commits", *defective_commits >= t.min_defective_commits,
        std::to_string(*defective_commits) + " defect-inducing commits");
  } else {
    report.checks.push_back({"Defective Commits", CheckStatus::unchecked, "labels not supplied"});
  }
  if (metadata) {
    add("Pull Requests", metadata->pull_requests >= t.min_pull_requests,
        std::to_string(metadata->pull_requests) + " pull requests");
    add("Issues", metadata->issues > t.min_issues_exclusive,
        std::to_string(metadata->issues) + " issues");
  } else {
    report.checks.push_back({"Pull Requests", CheckStatus::unchecked, "no metadata file"});
    report.checks.push_back({"Issues", CheckStatus::unchecked, "no metadata file"});
  }
  return report;
}

}  // namespace defectlab
