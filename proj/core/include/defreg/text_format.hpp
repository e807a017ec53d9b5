#pragma once

#include <string>
#include <string_view>

namespace defreg {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

// Strict parse of the whole token; FormatError names `what` on failure.
double parse_double(std::string_view token, std::string_view what);
long parse_long(std::string_view token, std::string_view what);

std::string_view trim(std::string_view s);

}  // namespace defreg
