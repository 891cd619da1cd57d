#pragma once

// Tabular output shared by the command-line tool: CSV with a header row and
// 15 significant digits, the equivalent JSON (array of row objects), and the
// manifest written next to every result.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coulomb/model.hpp"

namespace coulomb::io {

using Cell = std::variant<double, long long, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw Error("row width does not match the header");
        rows.push_back(std::move(row));
    }
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline std::string format_cell(const Cell& c) {
    struct {
        std::string operator()(double v) const { return format_number(v); }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
        }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    } visit;
    return std::visit(visit, c);
}

inline void write_csv(const Table& t, std::ostream& os) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
        os << '\n';
    }
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) {
        // JSON has no inf/nan; emit them as strings like the CSV does
        if (!std::isfinite(*d)) return format_number(*d);
        return *d;
    }
    if (const long long* i = std::get_if<long long>(&c)) return *i;
    if (const bool* b = std::get_if<bool>(&c)) return *b;
    return std::get<std::string>(c);
}

inline nlohmann::ordered_json to_json(const Table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    return os;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os = open_output(path);
    os << text;
    if (!os) throw Error("write failed: " + path.string());
}

/// path.csv -> path.<suffix>.csv (suffix inserted before the extension).
inline std::filesystem::path sibling(const std::filesystem::path& path, const std::string& suffix,
                                     const std::string& ext) {
    std::filesystem::path p = path;
    p.replace_extension();
    p += "." + suffix + ext;
    return p;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& out) {
    std::filesystem::path p = out;
    p.replace_extension();
    p += ".manifest.json";
    return p;
}

}  // namespace coulomb::io
