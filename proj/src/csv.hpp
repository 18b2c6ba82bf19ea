#pragma once

// Minimal CSV helpers for the two flat formats the tool reads
// (`cluster,y0,y1` populations and `y,w,cluster` datasets). No quoting.

#include "clusteradj/error.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clusteradj::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

/// Strips a UTF-8 byte-order mark if present.
inline std::string_view strip_bom(std::string_view s) {
    if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
    return s;
}

inline std::string row_context(std::size_t line_no) { return "line " + std::to_string(line_no); }

inline double parse_real(std::string_view field, std::string_view column, std::size_t line_no) {
    double v = 0.0;
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty() || !std::isfinite(v)) {
        throw DataError(row_context(line_no) + ": column '" + std::string(column) +
                        "' is not a finite number: '" + std::string(field) + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view field, std::string_view column, std::size_t line_no) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
        throw DataError(row_context(line_no) + ": column '" + std::string(column) +
                        "' is not an integer: '" + std::string(field) + "'");
    }
    return v;
}

/// Index of each required column in the header; throws DataError naming the
/// first missing column.
inline std::vector<std::size_t> locate_columns(const std::vector<std::string_view>& header,
                                               const std::vector<std::string_view>& required) {
    std::vector<std::size_t> idx;
    for (auto name : required) {
        std::size_t found = header.size();
        for (std::size_t k = 0; k < header.size(); ++k) {
            if (header[k] == name) found = k;
        }
        if (found == header.size()) {
            throw DataError("header: missing required column '" + std::string(name) + "'");
        }
        idx.push_back(found);
    }
    return idx;
}

/// Shortest round-trip text for a double.
inline std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace clusteradj::csv
