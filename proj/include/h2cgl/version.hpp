#pragma once

#include <charconv>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace h2cgl {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Stable 16-hex-digit digest of an ordered key/value list.
inline std::string hash_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    };
    for (const auto& [k, v] : entries) {
        feed(k);
        feed(v);
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

template <typename T>
std::string to_text(const T& v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

// Strict parse of a whole config value; throws std::invalid_argument naming the key.
template <typename T>
T parse_setting(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (value.empty() || ec != std::errc() || ptr != end) {
        throw std::invalid_argument("bad value '" + value + "' for " + key);
    }
    return out;
}

template <>
inline bool parse_setting<bool>(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("bad value '" + value + "' for " + key + " (expected true/false)");
}

}  // namespace h2cgl
