#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace softscore::csv {

/// Splits one line on commas. No quoting: fields never contain commas.
/// A trailing '\r' is dropped.
std::vector<std::string> split_line(std::string_view line);

/// Strict decimal parse ('.' point, optional exponent, no thousands
/// separators, no surrounding garbage). Throws ParseError naming `row`.
double parse_real(std::string_view field, std::size_t row, std::string_view column);

/// Fixed notation with `decimals` digits after the point.
std::string fixed(double value, int decimals = 6);

/// Joins fields with commas.
std::string join(const std::vector<std::string>& fields);

/// getline that strips a UTF-8 BOM and a trailing '\r'. Returns false at
/// end of input.
bool next_line(std::istream& in, std::string& line);

}  // namespace softscore::csv
