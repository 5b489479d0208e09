#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "fedtgan/similarity.hpp"
#include "fedtgan/table.hpp"

namespace fedtgan {

/// Per-column (min, max) fitted on a real table; constant columns map to 0.
class MinMaxNormalizer {
public:
    struct Range {
        double min = 0.0;
        double max = 0.0;
    };

    static MinMaxNormalizer fit(const Table& real) {
        MinMaxNormalizer n;
        for (std::size_t j = 0; j < real.column_count(); ++j) {
            if (real.meta(j).kind != ColumnKind::Continuous) continue;
            const auto& c = real.continuous(j);
            require(!c.empty(), ErrorKind::EmptyTable, "cannot fit a normalizer on an empty column");
            const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
            n.ranges_[j] = {*lo, *hi};
        }
        return n;
    }

    const Range& range(std::size_t column) const {
        auto it = ranges_.find(column);
        require(it != ranges_.end(), ErrorKind::WrongKind, "column " + std::to_string(column) + " was not fitted");
        return it->second;
    }

    std::vector<double> apply(std::size_t column, std::span<const double> values) const {
        const auto& r = range(column);
        const double span = r.max - r.min;
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = span > 0.0 ? (values[i] - r.min) / span : 0.0;
        return out;
    }

private:
    std::map<std::size_t, Range> ranges_;
};

struct SimilarityScore {
    std::optional<double> avg_jsd;
    std::optional<double> avg_wd;
    std::map<std::string, double> per_column;
};

namespace detail {

inline void require_same_schema(const Table& real, const Table& synth) {
    require(real.column_count() == synth.column_count(), ErrorKind::SchemaMismatch,
            "real and synthetic tables have different column counts");
    for (std::size_t j = 0; j < real.column_count(); ++j)
        require(real.meta(j).name == synth.meta(j).name && real.meta(j).kind == synth.meta(j).kind,
                ErrorKind::SchemaMismatch, "column " + std::to_string(j) + " differs between real and synthetic");
    require(real.rows() > 0 && synth.rows() > 0, ErrorKind::EmptyTable, "cannot score an empty table");
}

inline double column_jsd(const CategoricalColumn& real, const CategoricalColumn& synth) {
    std::map<std::string, std::pair<double, double>> freq;
    for (const auto& t : real) freq[t].first += 1.0;
    for (const auto& t : synth) freq[t].second += 1.0;
    std::vector<double> p, q;
    for (const auto& [_, f] : freq) {
        p.push_back(f.first / static_cast<double>(real.size()));
        q.push_back(f.second / static_cast<double>(synth.size()));
    }
    return jsd(p, q);
}

}  // namespace detail

/// Scores every column; averages are absent when the table has no column of
/// that kind.
inline SimilarityScore evaluate(const Table& real, const Table& synth) {
    detail::require_same_schema(real, synth);
    const auto norm = MinMaxNormalizer::fit(real);
    SimilarityScore s;
    double jsd_sum = 0.0, wd_sum = 0.0;
    std::size_t jsd_n = 0, wd_n = 0;
    for (std::size_t j = 0; j < real.column_count(); ++j) {
        double v;
        if (real.meta(j).kind == ColumnKind::Categorical) {
            v = detail::column_jsd(real.categorical(j), synth.categorical(j));
            jsd_sum += v;
            ++jsd_n;
        } else {
            v = wd_empirical(norm.apply(j, real.continuous(j)), norm.apply(j, synth.continuous(j)));
            wd_sum += v;
            ++wd_n;
        }
        s.per_column[real.meta(j).name] = v;
    }
    if (jsd_n) s.avg_jsd = jsd_sum / static_cast<double>(jsd_n);
    if (wd_n) s.avg_wd = wd_sum / static_cast<double>(wd_n);
    return s;
}

inline double avg_jsd(const Table& real, const Table& synth) {
    const auto s = evaluate(real, synth);
    require(s.avg_jsd.has_value(), ErrorKind::WrongKind, "table has no categorical columns");
    return *s.avg_jsd;
}

inline double avg_wd(const Table& real, const Table& synth) {
    const auto s = evaluate(real, synth);
    require(s.avg_wd.has_value(), ErrorKind::WrongKind, "table has no continuous columns");
    return *s.avg_wd;
}

// ---------------------------------------------------------------------------
// Metric time series.

struct MetricRow {
    std::size_t round = 0;
    double wall_clock_s = 0.0;
    std::optional<double> avg_jsd;
    std::optional<double> avg_wd;
    std::optional<double> gen_loss;
    std::optional<double> disc_loss;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

inline constexpr std::string_view kMetricsHeader = "round,wall_clock_s,avg_jsd,avg_wd,gen_loss,disc_loss";

namespace detail {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

}  // namespace detail

/// Appends metric rows to a CSV file, flushing after each row. Rounds must
/// not repeat or go backwards and the clock must strictly increase.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
        require(out_.good(), ErrorKind::Io, "cannot write " + path.string());
        out_ << kMetricsHeader << '\n';
        out_.flush();
    }

    void append(const MetricRow& row) {
        if (last_) {
            require(row.round > last_->round, ErrorKind::InvalidArgument,
                    "metric round " + std::to_string(row.round) + " after " + std::to_string(last_->round));
            require(row.wall_clock_s > last_->wall_clock_s, ErrorKind::InvalidArgument, "metric clock must increase");
        }
        out_ << row.round << ',' << detail::format_real(row.wall_clock_s) << ',' << detail::format_optional(row.avg_jsd)
             << ',' << detail::format_optional(row.avg_wd) << ',' << detail::format_optional(row.gen_loss) << ','
             << detail::format_optional(row.disc_loss) << '\n';
        out_.flush();
        require(out_.good(), ErrorKind::Io, "failed writing metrics");
        last_ = row;
    }

private:
    std::ofstream out_;
    std::optional<MetricRow> last_;
};

inline std::vector<MetricRow> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::MissingFile, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    require(line == kMetricsHeader, ErrorKind::Io, path.string() + " does not start with the metrics header");
    auto field = [&](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        auto v = detail::parse_number(s);
        require(v.has_value(), ErrorKind::Io, "bad number '" + s + "' in " + path.string());
        return v;
    };
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        require(f.size() == 6, ErrorKind::Io, "metrics row has " + std::to_string(f.size()) + " fields");
        MetricRow r;
        r.round = static_cast<std::size_t>(std::stoull(f[0]));
        r.wall_clock_s = field(f[1]).value_or(0.0);
        r.avg_jsd = field(f[2]);
        r.avg_wd = field(f[3]);
        r.gen_loss = field(f[4]);
        r.disc_loss = field(f[5]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace fedtgan
