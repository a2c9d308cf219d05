#include "failslow/csv.hpp"

#include <charconv>
#include <cmath>

namespace failslow::csv {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void fail(std::size_t line, std::size_t column, std::string_view column_name,
          const std::string& what) {
  std::string msg = "line " + std::to_string(line);
  if (column > 0) {
    msg += ", column " + std::to_string(column) + " (" + std::string(column_name) + ")";
  }
  msg += ": " + what;
  throw Error(ErrorKind::Parse, msg);
}

std::int64_t parse_int(std::string_view field, std::size_t line, std::size_t column,
                       std::string_view name) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    fail(line, column, name, "not an integer: '" + std::string(field) + "'");
  }
  return v;
}

double parse_real(std::string_view field, std::size_t line, std::size_t column,
                  std::string_view name) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
      !std::isfinite(v)) {
    fail(line, column, name, "not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

void expect_header(LineReader& reader, std::string_view header) {
  std::string line;
  if (!reader.next(line)) fail(1, 0, {}, "missing header (empty input)");
  if (line != header) {
    fail(reader.line_no(), 0, {}, "expected header '" + std::string(header) + "', got '" + line + "'");
  }
}

}  // namespace failslow::csv
