#ifndef PBENCH_CORE_TEXT_HPP
#define PBENCH_CORE_TEXT_HPP

#include <charconv>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace pbench {

// Shortest round-trip decimal form. Manifest files are hashed byte-for-byte,
// so float text must be a pure function of the value.
inline std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_real failed");
    return std::string(buf, res.ptr);
}

inline std::string format_real(float v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_real failed");
    return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad real: " + std::string(s));
    return v;
}

inline std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer: " + std::string(s));
    return v;
}

inline std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream is{std::string(line)};
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

}  // namespace pbench

#endif  // PBENCH_CORE_TEXT_HPP
