/// @file io.hpp
/// @brief Deterministic number formatting and small CSV helpers.
///
/// All on-disk artifacts are written through these helpers so that repeated
/// runs with identical inputs produce byte-identical files.  Doubles are
/// rendered with the shortest representation that round-trips exactly.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace degvis::io {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf, p);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("parse_double: cannot parse '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("parse_int: cannot parse '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string strip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
}

// ============================================================================
// Column-oriented CSV table
// ============================================================================

/// A trivial in-memory CSV table: a fixed header plus rows of doubles.
/// Sufficient for every file format this project reads or writes.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows; // each row has header.size() entries

    int column(std::string_view name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return static_cast<int>(j);
        throw std::runtime_error("csv: missing required column '" + std::string(name) + "'");
    }

    std::vector<double> column_values(std::string_view name) const {
        const int j = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(j)]);
        return out;
    }
};

inline void write_csv(std::ostream& os, const CsvTable& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j) os << ',';
        os << table.header[j];
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) os << ',';
            os << format_double(row[j]);
        }
        os << '\n';
    }
}

inline CsvTable read_csv(std::istream& is) {
    CsvTable table;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: empty input");
    for (auto& name : split(strip(line))) table.header.push_back(strip(name));
    while (std::getline(is, line)) {
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line);
        if (cells.size() != table.header.size())
            throw std::runtime_error("csv: row has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto& c : cells) row.push_back(parse_double(strip(c)));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace degvis::io
