#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace defectlab::csv {

/// RFC-4180 style table: header plus string cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  /// Column index by name; throws ParseError when absent.
  std::size_t require(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line);

/// Reads a table. Lines starting with '#' before the header are skipped and
/// returned through `preamble` when non-null. Quoted fields may not span lines.
Table read(std::istream& in, std::vector<std::string>* preamble = nullptr);
Table read_file(const std::string& path, std::vector<std::string>* preamble = nullptr);

std::string escape(std::string_view cell);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// Shortest round-trip decimal for a double; integers print without a point.
std::string format_number(double v);

double parse_double(std::string_view cell, std::size_t line);
long long parse_int(std::string_view cell, std::size_t line);

}  // namespace defectlab::csv
