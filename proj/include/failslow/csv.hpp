#pragma once

// Minimal CSV helpers for the flat, unquoted formats this project emits.

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "failslow/core.hpp"

namespace failslow::csv {

// Reads lines, tracking 1-based line numbers; strips a trailing '\r'.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> split(std::string_view line, char sep = ',');

[[noreturn]] void fail(std::size_t line, std::size_t column, std::string_view column_name,
                       const std::string& what);

// Field parsers: throw Error{Parse} naming line and column on failure.
std::int64_t parse_int(std::string_view field, std::size_t line, std::size_t column,
                       std::string_view name);
double parse_real(std::string_view field, std::size_t line, std::size_t column,
                  std::string_view name);

// Reads and validates the header; an absent or different header is a parse error.
void expect_header(LineReader& reader, std::string_view header);

}  // namespace failslow::csv
