#include "defectlab/git.hpp"

#include "defectlab/errors.hpp"

#include <charconv>
#include <cstdlib>

namespace defectlab {

GitRepo::GitRepo(std::string path) : path_(std::move(path)) {}

std::string GitRepo::binary() {
  const char* env = std::getenv("DEFECTLAB_GIT");
  return env && *env ? env : "git";
}

ProcessResult GitRepo::try_run(const std::vector<std::string>& args) const {
  std::vector<std::string> argv = {binary(), "-C", path_, "-c", "core.quotepath=off"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_process(argv);
}

std::string GitRepo::run(const std::vector<std::string>& args) const {
  auto r = try_run(args);
  if (r.exit_code != 0) {
    std::string cmd = "git";
    for (const auto& a : args) cmd += " " + a;
    throw MiningError(cmd + " failed in " + path_, r.err);
  }
  return std::move(r.out);
}

bool GitRepo::has_commits() const {
  auto r = try_run({"rev-parse", "--verify", "-q", "HEAD"});
  return r.exit_code == 0;
}

ObjectReader::ObjectReader(const GitRepo& repo)
    : child_(std::make_unique<PipedProcess>(
          std::vector<std::string>{GitRepo::binary(), "-C", repo.path(), "cat-file", "--batch"},
          std::string{})) {}

ObjectReader::~ObjectReader() = default;

std::optional<std::string> ObjectReader::read(std::string_view rev, std::string_view path) {
  std::string request;
  request.append(rev).append(":").append(path).append("\n");
  child_->write(request);
  const std::string header = child_->read_line();
  // "<sha> blob <size>" or "<object> missing" / "ambiguous"
  const auto last_space = header.rfind(' ');
  if (last_space == std::string::npos) return std::nullopt;
  const std::string tail = header.substr(last_space + 1);
  if (tail == "missing" || tail == "ambiguous") return std::nullopt;
  std::size_t size = 0;
  auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), size);
  if (ec != std::errc()) throw MiningError("unexpected cat-file header", header);
  std::string body = child_->read_exact(size + 1);  // trailing LF
  body.pop_back();
  if (header.find(" blob ") == std::string::npos) return std::nullopt;
  return body;
}

namespace {

int parse_int_at(std::string_view s, std::size_t& i) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data() + i, s.data() + s.size(), v);
  i = static_cast<std::size_t>(p - s.data());
  return v;
}

}  // namespace

std::vector<DiffHunk> parse_hunks(std::string_view diff) {
  std::vector<DiffHunk> hunks;
  std::size_t pos = 0;
  while (pos < diff.size()) {
    std::size_t eol = diff.find('\n', pos);
    if (eol == std::string_view::npos) eol = diff.size();
    const std::string_view line = diff.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.rfind("@@ -", 0) != 0) continue;
    DiffHunk h;
    std::size_t i = 4;
    h.old_start = parse_int_at(line, i);
    h.old_count = 1;
    if (i < line.size() && line[i] == ',') {
      ++i;
      h.old_count = parse_int_at(line, i);
    }
    i = line.find('+', i);
    if (i == std::string_view::npos) continue;
    ++i;
    h.new_start = parse_int_at(line, i);
    h.new_count = 1;
    if (i < line.size() && line[i] == ',') {
      ++i;
      h.new_count = parse_int_at(line, i);
    }
    hunks.push_back(h);
  }
  return hunks;
}

std::vector<BlameLine> parse_porcelain_blame(std::string_view porcelain) {
  // Each group starts with "<40-hex> <orig-line> <final-line> [<count>]".
  std::vector<BlameLine> lines;
  std::size_t pos = 0;
  while (pos < porcelain.size()) {
    std::size_t eol = porcelain.find('\n', pos);
    if (eol == std::string_view::npos) eol = porcelain.size();
    const std::string_view line = porcelain.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty() || line[0] == '\t') continue;
    if (line.size() < 42 || line[40] != ' ') continue;
    bool hex = true;
    for (std::size_t k = 0; k < 40 && hex; ++k) {
      const char c = line[k];
      hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    }
    if (!hex) continue;
    std::size_t i = 41;
    parse_int_at(line, i);  // original line number
    if (i >= line.size() || line[i] != ' ') continue;
    ++i;
    const int final_line = parse_int_at(line, i);
    lines.push_back({final_line, std::string(line.substr(0, 40))});
  }
  return lines;
}

}  // namespace defectlab
