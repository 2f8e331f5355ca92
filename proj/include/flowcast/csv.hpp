#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowcast::csv {

struct ParseError : std::invalid_argument {
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::invalid_argument(file + ":" + std::to_string(line) + ": " + what) {}
};

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (true) {
        std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(begin));
            break;
        }
        out.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Streams a CSV file line by line; `fn(line_number, fields)` is called for
/// every non-empty row after the header, which must equal `expected_header`.
template <typename Fn>
void for_each_row(const std::string& path, std::string_view expected_header, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
    ++line_no;
    if (trim(line) != expected_header) {
        throw ParseError(path, 1,
                         "unexpected header '" + line + "', want '" + std::string(expected_header) + "'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (body.empty()) continue;
        fn(line_no, split_fields(body));
    }
}

inline long to_long(std::string_view s, const std::string& file, std::size_t line) {
    s = trim(s);
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ParseError(file, line, "not an integer: '" + std::string(s) + "'");
    }
    return v;
}

inline double to_double(std::string_view s, const std::string& file, std::size_t line) {
    s = trim(s);
    try {
        std::size_t used = 0;
        double v = std::stod(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line, "not a number: '" + std::string(s) + "'");
    }
}

}  // namespace flowcast::csv
