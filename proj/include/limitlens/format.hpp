#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace limitlens {

// Shortest decimal string that round-trips the exact double. Keeps every
// emitted report byte-stable across runs and platforms.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, p);
}

inline double parse_double(std::string_view s) {
    if (s == "nan") return std::nan("");
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::invalid_argument("malformed number: " + std::string(s));
    return v;
}

}  // namespace limitlens
