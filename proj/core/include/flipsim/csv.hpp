#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace flipsim::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

}  // namespace flipsim::csv
