#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedtgan/error.hpp"

namespace fedtgan {

enum class ColumnKind { Categorical, Continuous };

inline std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::Categorical ? "categorical" : "continuous";
}

struct ColumnMeta {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    std::size_t index = 0;

    friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

using CategoricalColumn = std::vector<std::string>;
using ContinuousColumn = std::vector<double>;
using ColumnData = std::variant<CategoricalColumn, ContinuousColumn>;

/// Token used for empty categorical cells.
inline constexpr std::string_view kMissingToken = "<NA>";

/// Column-major table. Every column holds exactly `rows()` cells; continuous
/// cells are finite.
class Table {
public:
    Table() = default;

    Table(std::vector<ColumnMeta> schema, std::vector<ColumnData> columns)
        : schema_(std::move(schema)), columns_(std::move(columns)) {
        validate();
    }

    const std::vector<ColumnMeta>& schema() const noexcept { return schema_; }
    std::size_t column_count() const noexcept { return schema_.size(); }

    std::size_t rows() const noexcept {
        if (columns_.empty()) return 0;
        return std::visit([](const auto& c) { return c.size(); }, columns_.front());
    }

    const ColumnMeta& meta(std::size_t j) const { return schema_.at(j); }

    std::size_t column_index(std::string_view name) const {
        for (const auto& m : schema_)
            if (m.name == name) return m.index;
        throw Error(ErrorKind::UnknownColumn, "no column named '" + std::string(name) + "'");
    }

    const ColumnData& column(std::size_t j) const { return columns_.at(j); }

    const CategoricalColumn& categorical(std::size_t j) const {
        require(schema_.at(j).kind == ColumnKind::Categorical, ErrorKind::WrongKind,
                "column '" + schema_[j].name + "' is not categorical");
        return std::get<CategoricalColumn>(columns_[j]);
    }

    const ContinuousColumn& continuous(std::size_t j) const {
        require(schema_.at(j).kind == ColumnKind::Continuous, ErrorKind::WrongKind,
                "column '" + schema_[j].name + "' is not continuous");
        return std::get<ContinuousColumn>(columns_[j]);
    }

    /// Builds a table with the same schema from the given row indices
    /// (indices may repeat).
    Table select_rows(const std::vector<std::size_t>& indices) const {
        std::vector<ColumnData> out;
        out.reserve(columns_.size());
        for (const auto& col : columns_) {
            std::visit(
                [&](const auto& c) {
                    std::decay_t<decltype(c)> picked;
                    picked.reserve(indices.size());
                    for (std::size_t i : indices) picked.push_back(c.at(i));
                    out.emplace_back(std::move(picked));
                },
                col);
        }
        return Table(schema_, std::move(out));
    }

    std::size_t distinct_rows() const {
        std::set<std::vector<std::string>> seen;
        for (std::size_t r = 0; r < rows(); ++r) seen.insert(row_key(r));
        return seen.size();
    }

    friend bool operator==(const Table&, const Table&) = default;

private:
    std::vector<std::string> row_key(std::size_t r) const {
        std::vector<std::string> key;
        for (const auto& col : columns_) {
            if (const auto* cat = std::get_if<CategoricalColumn>(&col)) {
                key.push_back((*cat)[r]);
            } else {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", std::get<ContinuousColumn>(col)[r]);
                key.emplace_back(buf);
            }
        }
        return key;
    }

    void validate() const {
        require(schema_.size() == columns_.size(), ErrorKind::ArityMismatch,
                "schema has " + std::to_string(schema_.size()) + " columns, data has " +
                    std::to_string(columns_.size()));
        std::set<std::string> names;
        const std::size_t n = rows();
        for (std::size_t j = 0; j < schema_.size(); ++j) {
            const auto& m = schema_[j];
            require(m.index == j, ErrorKind::InvalidArgument, "column indices must be contiguous from 0");
            require(names.insert(m.name).second, ErrorKind::InvalidArgument,
                    "duplicate column name '" + m.name + "'");
            const bool is_cat = std::holds_alternative<CategoricalColumn>(columns_[j]);
            require(is_cat == (m.kind == ColumnKind::Categorical), ErrorKind::WrongKind,
                    "column '" + m.name + "' data does not match its kind");
            const std::size_t len = std::visit([](const auto& c) { return c.size(); }, columns_[j]);
            require(len == n, ErrorKind::ArityMismatch, "column '" + m.name + "' has a different row count");
            if (!is_cat) {
                for (double v : std::get<ContinuousColumn>(columns_[j]))
                    require(std::isfinite(v), ErrorKind::InvalidArgument,
                            "non-finite value in continuous column '" + m.name + "'");
            }
        }
    }

    std::vector<ColumnMeta> schema_;
    std::vector<ColumnData> columns_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_number(std::string_view token) {
    if (token.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

using SchemaHint = std::map<std::string, ColumnKind>;

struct CsvLoadResult {
    Table table;
    std::size_t dropped_rows = 0;
};

/// Reads a comma-delimited file with a header row. Kinds are inferred
/// (all-numeric columns are continuous) unless overridden by `hint`. Rows
/// with an unparseable continuous cell are dropped and counted.
inline CsvLoadResult load_csv_with_report(const std::filesystem::path& path, const SchemaHint& hint = {}) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::MissingFile, "cannot open '" + path.string() + "'");

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::EmptyTable,
            "'" + path.string() + "' has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header;
    for (auto& f : detail::split_csv_line(line)) header.push_back(detail::trim(f));

    for (const auto& [name, kind] : hint) {
        bool found = false;
        for (const auto& h : header) found = found || h == name;
        require(found, ErrorKind::UnknownColumn, "schema hint names unknown column '" + name + "'");
    }

    std::vector<std::vector<std::string>> raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        require(fields.size() == header.size(), ErrorKind::ArityMismatch,
                "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                    " fields, header has " + std::to_string(header.size()));
        for (auto& f : fields) f = detail::trim(f);
        raw.push_back(std::move(fields));
    }

    const std::size_t q = header.size();
    std::vector<ColumnMeta> schema(q);
    for (std::size_t j = 0; j < q; ++j) {
        schema[j].name = header[j];
        schema[j].index = j;
        if (auto it = hint.find(header[j]); it != hint.end()) {
            schema[j].kind = it->second;
            continue;
        }
        bool any = false;
        bool numeric = true;
        for (const auto& row : raw) {
            if (row[j].empty()) continue;
            any = true;
            if (!detail::parse_number(row[j])) {
                numeric = false;
                break;
            }
        }
        schema[j].kind = (any && numeric) ? ColumnKind::Continuous : ColumnKind::Categorical;
    }

    std::vector<ColumnData> columns(q);
    for (std::size_t j = 0; j < q; ++j) {
        if (schema[j].kind == ColumnKind::Categorical)
            columns[j] = CategoricalColumn{};
        else
            columns[j] = ContinuousColumn{};
    }
    std::size_t dropped = 0;
    std::vector<double> parsed(q);
    for (const auto& row : raw) {
        bool ok = true;
        for (std::size_t j = 0; j < q && ok; ++j) {
            if (schema[j].kind != ColumnKind::Continuous) continue;
            auto v = detail::parse_number(row[j]);
            if (v)
                parsed[j] = *v;
            else
                ok = false;
        }
        if (!ok) {
            ++dropped;
            continue;
        }
        for (std::size_t j = 0; j < q; ++j) {
            if (schema[j].kind == ColumnKind::Continuous) {
                std::get<ContinuousColumn>(columns[j]).push_back(parsed[j]);
            } else {
                std::get<CategoricalColumn>(columns[j])
                    .push_back(row[j].empty() ? std::string(kMissingToken) : row[j]);
            }
        }
    }

    Table table(std::move(schema), std::move(columns));
    require(table.rows() > 0, ErrorKind::EmptyTable,
            "'" + path.string() + "' has no usable rows (" + std::to_string(dropped) + " dropped)");
    return {std::move(table), dropped};
}

inline Table load_csv(const std::filesystem::path& path, const SchemaHint& hint = {}) {
    return load_csv_with_report(path, hint).table;
}

inline void write_csv(const Table& table, std::ostream& out) {
    const auto& schema = table.schema();
    for (std::size_t j = 0; j < schema.size(); ++j) out << (j ? "," : "") << detail::csv_escape(schema[j].name);
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t j = 0; j < schema.size(); ++j) {
            if (j) out << ',';
            if (schema[j].kind == ColumnKind::Categorical) {
                out << detail::csv_escape(table.categorical(j)[r]);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", table.continuous(j)[r]);
                out << buf;
            }
        }
        out << '\n';
    }
}

inline void write_csv(const Table& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Io, "cannot write '" + path.string() + "'");
    write_csv(table, out);
}

}  // namespace fedtgan
