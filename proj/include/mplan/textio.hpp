#pragma once

#include <cstdio>
#include <string>

namespace mplan {

/// Shortest exact decimal for a double ("%.17g" round-trips bit-exactly).
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Drop a trailing '#' comment and surrounding whitespace.
inline std::string strip_comment(const std::string& line) {
    std::string s = line;
    if (const auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace mplan
