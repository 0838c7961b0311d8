#pragma once

// Minimal RFC 4180 style CSV helpers shared by the tabular readers.

#include <map>
#include <string>
#include <vector>

namespace weave::detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct CsvTable {
  std::vector<std::string> header;
  std::map<std::string, std::size_t> column;
  /// Data rows with their 1-based file line numbers.
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

/// Parses `text` into a header plus rows; throws SchemaError on ragged rows or
/// missing `required` columns. Blank lines are skipped.
CsvTable parse_csv(const std::string& text, const std::string& source,
                   const std::vector<std::string>& required);

/// Parses a finite double; throws SchemaError naming `source`:`line`.
double parse_csv_double(const std::string& field, const std::string& source, std::size_t line);

}  // namespace weave::detail
