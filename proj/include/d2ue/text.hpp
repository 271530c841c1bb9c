#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace d2ue::text {

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Strict parsers: the whole (trimmed) string must be consumed.
/// Throw ConfigError mentioning `what` on failure.
double parse_double(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);
std::uint64_t parse_uint(std::string_view s, std::string_view what);

}  // namespace d2ue::text

namespace d2ue::text {

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped; any other line without '=' is a ConfigError naming `source`.
std::vector<KeyValue> parse_key_values(std::string_view content, std::string_view source);

}  // namespace d2ue::text
