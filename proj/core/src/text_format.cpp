#include "defreg/text_format.hpp"

#include <charconv>
#include <cmath>

#include "defreg/errors.hpp"

namespace defreg {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (v == 0.0) {
        v = 0.0;  // drop the sign of -0
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::string_view what) {
    token = trim(token);
    if (token == "nan") {
        return std::nan("");
    }
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    if (!token.empty() && *begin == '+') {
        ++begin;
    }
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end || token.empty()) {
        throw FormatError("invalid number '" + std::string(token) + "' for " + std::string(what));
    }
    return v;
}

long parse_long(std::string_view token, std::string_view what) {
    token = trim(token);
    long v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty()) {
        throw FormatError("invalid integer '" + std::string(token) + "' for " + std::string(what));
    }
    return v;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace defreg
