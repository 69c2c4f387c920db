#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <system_error>

namespace stochgain {

/// Shortest round-trip decimal form of a double. Locale independent, so files
/// written from the same values are byte-identical.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

/// Empty optionals stand for +infinity (infinite moments).
inline std::string format_double(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("inf");
}

}  // namespace stochgain
