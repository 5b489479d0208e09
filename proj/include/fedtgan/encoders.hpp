#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedtgan/error.hpp"
#include "fedtgan/gmm.hpp"
#include "fedtgan/matrix.hpp"
#include "fedtgan/table.hpp"

namespace fedtgan {

/// Category frequencies of one categorical column.
struct CategoricalStats {
    std::string column;
    std::map<std::string, std::uint64_t> counts;

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& [_, c] : counts) n += c;
        return n;
    }

    friend bool operator==(const CategoricalStats&, const CategoricalStats&) = default;
};

/// Global category list; a token's position is its one-hot index.
struct LabelEncoder {
    std::string column;
    std::vector<std::string> categories;

    std::size_t index_of(const std::string& token) const {
        auto it = std::lower_bound(categories.begin(), categories.end(), token);
        require(it != categories.end() && *it == token, ErrorKind::UnknownToken,
                "token '" + token + "' is not in the encoder for column '" + column + "'");
        return static_cast<std::size_t>(it - categories.begin());
    }

    friend bool operator==(const LabelEncoder&, const LabelEncoder&) = default;
};

using ColumnEncoder = std::variant<LabelEncoder, GmmParams>;

struct Segment {
    std::size_t column = 0;
    ColumnKind kind = ColumnKind::Categorical;
    std::size_t offset = 0;
    /// Categorical: number of categories. Continuous: 1 + number of modes.
    std::size_t width = 0;

    std::size_t modes() const { return kind == ColumnKind::Continuous ? width - 1 : 0; }

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct EncodedLayout {
    std::vector<Segment> segments;
    std::size_t width = 0;

    friend bool operator==(const EncodedLayout&, const EncodedLayout&) = default;
};

inline CategoricalStats local_categorical_stats(const Table& shard, const std::string& column) {
    const std::size_t j = shard.column_index(column);
    const auto& cells = shard.categorical(j);
    CategoricalStats stats{column, {}};
    for (const auto& token : cells) ++stats.counts[token];
    return stats;
}

struct CategoricalAggregate {
    LabelEncoder encoder;
    CategoricalStats counts;
};

/// Builds the label encoder over the sorted union of client tokens and the
/// element-wise summed global frequencies.
inline CategoricalAggregate aggregate_categorical(std::span<const CategoricalStats> stats) {
    require(!stats.empty(), ErrorKind::InvalidArgument, "no categorical statistics to aggregate");
    CategoricalAggregate out;
    out.counts.column = stats.front().column;
    for (const auto& s : stats) {
        require(s.column == out.counts.column, ErrorKind::SchemaMismatch,
                "statistics for columns '" + out.counts.column + "' and '" + s.column + "' mixed");
        for (const auto& [token, c] : s.counts) out.counts.counts[token] += c;
    }
    out.encoder.column = out.counts.column;
    for (const auto& [token, _] : out.counts.counts) out.encoder.categories.push_back(token);
    return out;
}

struct ContinuousCode {
    double alpha = 0.0;
    std::size_t mode = 0;
};

/// Mode-specific normalization: the mode with the largest weighted density
/// wins, alpha is the offset from its mean in units of 4 std, clamped to [-1, 1].
inline ContinuousCode encode_continuous(double value, const GmmParams& gmm) {
    require(std::isfinite(value), ErrorKind::InvalidArgument, "cannot encode a non-finite value");
    std::size_t best = 0;
    double best_score = weighted_log_density(gmm, 0, value);
    for (std::size_t k = 1; k < gmm.modes(); ++k) {
        const double s = weighted_log_density(gmm, k, value);
        if (s > best_score) {
            best_score = s;
            best = k;
        }
    }
    const double alpha = (value - gmm.means[best]) / (4.0 * gmm.stds[best]);
    return {std::clamp(alpha, -1.0, 1.0), best};
}

inline double decode_continuous(double alpha, std::size_t mode, const GmmParams& gmm) {
    require(mode < gmm.modes(), ErrorKind::InvalidArgument,
            "mode " + std::to_string(mode) + " out of range for " + std::to_string(gmm.modes()) + "-mode mixture");
    return alpha * 4.0 * gmm.stds[mode] + gmm.means[mode];
}

inline EncodedLayout make_layout(const std::vector<ColumnMeta>& schema, std::span<const ColumnEncoder> encoders) {
    require(schema.size() == encoders.size(), ErrorKind::SchemaMismatch,
            "schema has " + std::to_string(schema.size()) + " columns but " + std::to_string(encoders.size()) +
                " encoders were given");
    EncodedLayout layout;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        Segment seg;
        seg.column = j;
        seg.kind = schema[j].kind;
        seg.offset = layout.width;
        if (schema[j].kind == ColumnKind::Categorical) {
            const auto* le = std::get_if<LabelEncoder>(&encoders[j]);
            require(le != nullptr, ErrorKind::WrongKind, "column '" + schema[j].name + "' needs a label encoder");
            require(!le->categories.empty(), ErrorKind::InvalidArgument, "empty label encoder");
            seg.width = le->categories.size();
        } else {
            const auto* g = std::get_if<GmmParams>(&encoders[j]);
            require(g != nullptr, ErrorKind::WrongKind, "column '" + schema[j].name + "' needs a mixture encoder");
            seg.width = 1 + g->modes();
        }
        layout.width += seg.width;
        layout.segments.push_back(seg);
    }
    return layout;
}

inline Matrix encode_table(const Table& shard, const EncodedLayout& layout, std::span<const ColumnEncoder> encoders) {
    require(layout.segments.size() == shard.column_count() && encoders.size() == shard.column_count(),
            ErrorKind::SchemaMismatch, "shard schema does not match the encoders");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(shard.rows()), static_cast<Eigen::Index>(layout.width));
    for (const auto& seg : layout.segments) {
        require(shard.meta(seg.column).kind == seg.kind, ErrorKind::SchemaMismatch,
                "column '" + shard.meta(seg.column).name + "' kind differs from the layout");
        if (seg.kind == ColumnKind::Categorical) {
            const auto& le = std::get<LabelEncoder>(encoders[seg.column]);
            const auto& cells = shard.categorical(seg.column);
            for (std::size_t r = 0; r < cells.size(); ++r)
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(seg.offset + le.index_of(cells[r]))) = 1.0;
        } else {
            const auto& gmm = std::get<GmmParams>(encoders[seg.column]);
            const auto& cells = shard.continuous(seg.column);
            for (std::size_t r = 0; r < cells.size(); ++r) {
                const auto code = encode_continuous(cells[r], gmm);
                const auto row = static_cast<Eigen::Index>(r);
                out(row, static_cast<Eigen::Index>(seg.offset)) = code.alpha;
                out(row, static_cast<Eigen::Index>(seg.offset + 1 + code.mode)) = 1.0;
            }
        }
    }
    return out;
}

namespace detail {

inline std::size_t argmax(const double* first, std::size_t n) {
    return static_cast<std::size_t>(std::max_element(first, first + n) - first);
}

}  // namespace detail

/// Inverse of encode_table for (possibly soft) generator output: argmax picks
/// the category and the mode, alpha is clamped before decoding.
inline Table decode_rows(const Matrix& encoded, const std::vector<ColumnMeta>& schema, const EncodedLayout& layout,
                         std::span<const ColumnEncoder> encoders) {
    require(static_cast<std::size_t>(encoded.cols()) == layout.width, ErrorKind::WidthMismatch,
            "encoded width " + std::to_string(encoded.cols()) + " != layout width " + std::to_string(layout.width));
    const std::size_t n = static_cast<std::size_t>(encoded.rows());
    std::vector<ColumnData> columns;
    for (const auto& seg : layout.segments) {
        if (seg.kind == ColumnKind::Categorical) {
            const auto& le = std::get<LabelEncoder>(encoders[seg.column]);
            CategoricalColumn col(n);
            for (std::size_t r = 0; r < n; ++r)
                col[r] = le.categories[detail::argmax(&encoded(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(seg.offset)), seg.width)];
            columns.emplace_back(std::move(col));
        } else {
            const auto& gmm = std::get<GmmParams>(encoders[seg.column]);
            ContinuousColumn col(n);
            for (std::size_t r = 0; r < n; ++r) {
                const auto row = static_cast<Eigen::Index>(r);
                const double alpha = std::clamp(encoded(row, static_cast<Eigen::Index>(seg.offset)), -1.0, 1.0);
                const std::size_t mode = detail::argmax(&encoded(row, static_cast<Eigen::Index>(seg.offset + 1)), seg.modes());
                col[r] = decode_continuous(alpha, mode, gmm);
            }
            columns.emplace_back(std::move(col));
        }
    }
    return Table(schema, std::move(columns));
}

}  // namespace fedtgan
