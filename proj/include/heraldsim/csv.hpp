#pragma once

// CSV emission and parsing.  All floating-point fields are written with
// shortest round-trip precision so that re-running a scenario with the
// same seed produces byte-identical files and readers recover the exact
// binary values.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "heraldsim/qstate.hpp"

namespace heraldsim {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("parse_double: bad numeric field '" +
                                    std::string(s) + "'");
    return v;
}

namespace detail {
inline void append_cell(std::string& line, double v) { line += format_double(v); }
inline void append_cell(std::string& line, int v) { line += std::to_string(v); }
inline void append_cell(std::string& line, std::int64_t v) { line += std::to_string(v); }
inline void append_cell(std::string& line, std::uint64_t v) { line += std::to_string(v); }
inline void append_cell(std::string& line, std::string_view v) {
    if (v.find_first_of(",\n\r") != std::string_view::npos)
        throw std::invalid_argument("CsvWriter: cell contains a separator");
    line += v;
}
inline void append_cell(std::string& line, const std::string& v) {
    append_cell(line, std::string_view(v));
}
inline void append_cell(std::string& line, const char* v) {
    append_cell(line, std::string_view(v));
}
}  // namespace detail

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_)
            throw std::runtime_error("CsvWriter: cannot open " + path.string());
    }

    template <typename... Cells>
    void row(const Cells&... cells) {
        std::string line;
        bool first = true;
        (
            [&] {
                if (!first) line += ',';
                first = false;
                detail::append_cell(line, cells);
            }(),
            ...);
        line += '\n';
        out_ << line;
        if (!out_) throw std::runtime_error("CsvWriter: write failed");
    }

private:
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("CsvTable: no column '" + std::string(name) + "'");
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
    CsvTable table;
    std::string line;
    auto split = [](const std::string& text) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = text.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(text.substr(start));
                break;
            }
            cells.push_back(text.substr(start, comma - start));
            start = comma + 1;
        }
        return cells;
    };
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            table.header = split(line);
            first = false;
        } else {
            table.rows.push_back(split(line));
        }
    }
    if (first) throw std::runtime_error("read_csv: empty file " + path.string());
    return table;
}

// Density matrices serialize as one row per entry.
inline void write_matrix_csv(const std::filesystem::path& path, const ComplexMatrix& m) {
    CsvWriter w(path);
    w.row("row", "col", "re", "im");
    for (int r = 0; r < m.dim(); ++r)
        for (int c = 0; c < m.dim(); ++c)
            w.row(r, c, m(r, c).real(), m(r, c).imag());
}

inline ComplexMatrix read_matrix_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    int dim = 0;
    if (t.rows.size() == 4)
        dim = 2;
    else if (t.rows.size() == 16)
        dim = 4;
    else
        throw std::invalid_argument("read_matrix_csv: expected 4 or 16 entries");
    ComplexMatrix m(dim);
    const int cr = t.column("row"), cc = t.column("col");
    const int cre = t.column("re"), cim = t.column("im");
    for (const auto& row : t.rows) {
        const int r = static_cast<int>(parse_double(row[static_cast<std::size_t>(cr)]));
        const int c = static_cast<int>(parse_double(row[static_cast<std::size_t>(cc)]));
        m(r, c) = complex_t(parse_double(row[static_cast<std::size_t>(cre)]),
                            parse_double(row[static_cast<std::size_t>(cim)]));
    }
    return m;
}

// Companion export for bar-chart rendering of the real part.
inline void write_matrix_realpart_csv(const std::filesystem::path& path,
                                      const ComplexMatrix& m) {
    static const char* labels2[] = {"up", "down"};
    static const char* labels4[] = {"R_up", "R_down", "L_up", "L_down"};
    const char** labels = m.dim() == 2 ? labels2 : labels4;
    CsvWriter w(path);
    w.row("row_state", "col_state", "re");
    for (int r = 0; r < m.dim(); ++r)
        for (int c = 0; c < m.dim(); ++c) w.row(labels[r], labels[c], m(r, c).real());
}

// Sidecar with the exact parameter snapshot, one key=value per line.
inline void write_metadata(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metadata: cannot open " + path.string());
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw std::runtime_error("write_metadata: write failed");
}

}  // namespace heraldsim
