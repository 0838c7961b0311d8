#include "csv.hpp"

#include <fmt/format.h>

#include <cmath>
#include <sstream>

#include "weave/errors.hpp"

namespace weave::detail {

CsvTable parse_csv(const std::string& text, const std::string& source,
                   const std::vector<std::string>& required) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      have_header = true;
      t.header = fields;
      for (std::size_t k = 0; k < fields.size(); ++k) t.column[fields[k]] = k;
      for (const auto& name : required)
        if (!t.column.contains(name))
          throw SchemaError(fmt::format("{}: missing column '{}'", source, name), lineno);
      continue;
    }
    if (fields.size() != t.header.size())
      throw SchemaError(fmt::format("{}:{}: expected {} fields, got {}", source, lineno,
                                    t.header.size(), fields.size()),
                        lineno);
    t.rows.emplace_back(lineno, std::move(fields));
  }
  if (!have_header) throw SchemaError(fmt::format("{}: empty file", source));
  return t;
}

double parse_csv_double(const std::string& field, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == field.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw SchemaError(fmt::format("{}:{}: bad number '{}'", source, line, field), line);
}

}  // namespace weave::detail
