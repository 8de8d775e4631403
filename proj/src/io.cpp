#include "polaron/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace polaron::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

Json number(double v) {
  if (std::isfinite(v)) return Json(v);
  return Json(format_double(v));
}

namespace {

void dump(std::string& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        out += Json(it.key()).dump();
        out += ": ";
        dump(out, it.value(), indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump(out, j[i], indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        dump(out, j[i], indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "\"" + format_double(v) + "\"";
      return;
    }
    default:
      out += j.dump();
  }
}

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump(out, j, 0);
  out += "\n";
  return out;
}

void write_json(std::ostream& out, const Json& j) { out << dump_json(j); }

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("table: row width differs from header");
  rows.push_back(std::move(row));
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << csv_cell(table.columns[c]);
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
    out << "\n";
  }
}

std::string to_csv(const Table& table) {
  std::ostringstream s;
  write_csv(s, table);
  return s.str();
}

Json to_json(const Table& table) {
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json r = Json::array();
    for (const auto& c : row) {
      if (const auto* d = std::get_if<double>(&c))
        r.push_back(number(*d));
      else if (const auto* i = std::get_if<std::int64_t>(&c))
        r.push_back(*i);
      else
        r.push_back(std::get<std::string>(c));
    }
    rows.push_back(std::move(r));
  }
  Json j;
  j["columns"] = table.columns;
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace polaron::io
