#include "d2ue/text.hpp"

#include "d2ue/error.hpp"

#include <charconv>

namespace d2ue::text {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

namespace {

template <typename T>
T parse_number(std::string_view s, std::string_view what, const char* kind) {
    s = trim(s);
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(std::string(what) + ": expected " + kind + ", got '" + std::string(s) + "'");
    return v;
}

}  // namespace

double parse_double(std::string_view s, std::string_view what) {
    return parse_number<double>(s, what, "a real number");
}

std::int64_t parse_int(std::string_view s, std::string_view what) {
    return parse_number<std::int64_t>(s, what, "an integer");
}

std::uint64_t parse_uint(std::string_view s, std::string_view what) {
    return parse_number<std::uint64_t>(s, what, "a non-negative integer");
}

}  // namespace d2ue::text

namespace d2ue::text {

std::vector<KeyValue> parse_key_values(std::string_view content, std::string_view source) {
    std::vector<KeyValue> out;
    std::size_t line_no = 0;
    for (const auto& raw : split(content, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
        out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return out;
}

}  // namespace d2ue::text
