#include "defectlab/csv.hpp"

#include "defectlab/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace defectlab::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::require(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw ParseError(1, "missing column '" + std::string(name) + "'");
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

Table read(std::istream& in, std::vector<std::string>* preamble) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!have_header) {
      if (!line.empty() && line[0] == '#') {
        if (preamble) preamble->push_back(line);
        continue;
      }
      if (line.empty()) continue;
      t.header = split_line(line);
      have_header = true;
      continue;
    }
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw ParseError(lineno, "expected " + std::to_string(t.header.size()) + " cells, got " +
                                   std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table read_file(const std::string& path, std::vector<std::string>* preamble) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read(in, preamble);
}

std::string escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << escape(cells[i]);
  }
  out << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{}", v);
}

double parse_double(std::string_view cell, std::size_t line) {
  if (cell.empty()) return std::nan("");
  double v = 0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    throw ParseError(line, "not a number: '" + std::string(cell) + "'");
  return v;
}

long long parse_int(std::string_view cell, std::size_t line) {
  long long v = 0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    throw ParseError(line, "not an integer: '" + std::string(cell) + "'");
  return v;
}

}  // namespace defectlab::csv
