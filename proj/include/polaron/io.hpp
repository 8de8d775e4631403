#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace polaron {

using Json = nlohmann::ordered_json;

namespace io {

/// Shortest text is not used on purpose: every double is written with 17
/// significant digits, '.' as decimal point, independent of the locale.
/// Non-finite values become "inf", "-inf" and "nan".
std::string format_double(double v);

/// Inverse of format_double for the three non-finite spellings; finite
/// numbers go through std::from_chars. Throws std::invalid_argument.
double parse_double(const std::string& s);

/// JSON text with 2-space indentation and 17-digit numbers. Non-finite doubles
/// are written as the strings produced by format_double.
std::string dump_json(const Json& j);
void write_json(std::ostream& out, const Json& j);

/// Double that may be non-finite, as a JSON value.
Json number(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Header line plus one line per row; strings are quoted when they contain
/// a comma, quote or newline.
void write_csv(std::ostream& out, const Table& table);
std::string to_csv(const Table& table);
/// {"columns": [...], "rows": [[...], ...]}.
Json to_json(const Table& table);

}  // namespace io
}  // namespace polaron
