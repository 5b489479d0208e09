#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedtgan/encoders.hpp"
#include "fedtgan/error.hpp"
#include "fedtgan/gmm.hpp"
#include "fedtgan/random.hpp"

namespace fedtgan {

inline constexpr std::size_t kDivergenceSampleSize = 10'000;

/// Square-root Jensen-Shannon divergence with base-2 logs, in [0, 1].
inline double jsd(std::span<const double> p, std::span<const double> q) {
    require(p.size() == q.size(), ErrorKind::InvalidArgument,
            "jsd inputs differ in length (" + std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
    require(!p.empty(), ErrorKind::InvalidArgument, "jsd of empty vectors");
    double sp = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        require(p[k] >= 0.0 && q[k] >= 0.0 && std::isfinite(p[k]) && std::isfinite(q[k]), ErrorKind::InvalidArgument,
                "jsd inputs must be finite and non-negative");
        sp += p[k];
        sq += q[k];
    }
    require(std::abs(sp - 1.0) <= 1e-9 && std::abs(sq - 1.0) <= 1e-9, ErrorKind::InvalidArgument,
            "jsd inputs must each sum to 1");
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double m = 0.5 * (p[k] + q[k]);
        const double tp = p[k] > 0.0 ? p[k] * std::log2(p[k] / m) : 0.0;
        const double tq = q[k] > 0.0 ? q[k] * std::log2(q[k] / m) : 0.0;
        d += tp + tq;
    }
    return std::clamp(std::sqrt(std::max(0.5 * d, 0.0)), 0.0, 1.0);
}

/// First Wasserstein distance between two 1-D empirical distributions,
/// integrating the gap between their quantile functions.
inline double wd_empirical(std::span<const double> u, std::span<const double> v) {
    require(!u.empty() && !v.empty(), ErrorKind::InvalidArgument, "wd of an empty sample");
    std::vector<double> a(u.begin(), u.end()), b(v.begin(), v.end());
    for (double x : a) require(std::isfinite(x), ErrorKind::InvalidArgument, "non-finite sample");
    for (double x : b) require(std::isfinite(x), ErrorKind::InvalidArgument, "non-finite sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    // Quantile breakpoints of a sit at multiples of m, those of b at multiples
    // of n, on a grid of n*m units.
    const auto n = static_cast<std::uint64_t>(a.size());
    const auto m = static_cast<std::uint64_t>(b.size());
    const double unit = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
    std::size_t i = 0, j = 0;
    std::uint64_t pos = 0;
    double total = 0.0;
    while (i < a.size() && j < b.size()) {
        const std::uint64_t next_a = (i + 1) * m;
        const std::uint64_t next_b = (j + 1) * n;
        const std::uint64_t next = std::min(next_a, next_b);
        total += static_cast<double>(next - pos) * std::abs(a[i] - b[j]);
        pos = next;
        if (next_a == next) ++i;
        if (next_b == next) ++j;
    }
    return total * unit;
}

using ColumnStatistic = std::variant<CategoricalStats, GmmParams>;

struct ClientStatistics {
    std::vector<ColumnStatistic> columns;
    std::size_t rows = 0;
};

/// P x Q matrix of per-client, per-column divergences from the global statistics.
struct DivergenceMatrix {
    std::vector<std::size_t> client_ids;
    std::vector<std::string> columns;
    std::vector<ColumnKind> kinds;
    Matrix entries;

    std::size_t clients() const { return static_cast<std::size_t>(entries.rows()); }
    std::size_t column_count() const { return static_cast<std::size_t>(entries.cols()); }
};

namespace detail {

inline std::vector<double> normalized_counts(const CategoricalStats& stats, const std::vector<std::string>& categories) {
    const double total = static_cast<double>(stats.total());
    require(total > 0.0, ErrorKind::InvalidArgument, "frequency table for '" + stats.column + "' is empty");
    std::vector<double> p;
    p.reserve(categories.size());
    for (const auto& token : categories) {
        auto it = stats.counts.find(token);
        p.push_back(it == stats.counts.end() ? 0.0 : static_cast<double>(it->second) / total);
    }
    return p;
}

}  // namespace detail

/// Builds S: categorical entries are jsd(X_ij, X_j), continuous entries the
/// empirical WD between `sample_n` draws of VGM_ij and of VGM_j. Draw seeds
/// depend on the column only, so every client is compared using the same
/// random numbers and clients with identical statistics get identical entries.
inline DivergenceMatrix divergence_matrix(const std::vector<ColumnMeta>& schema,
                                          std::span<const ColumnStatistic> global,
                                          std::span<const ClientStatistics> locals, std::size_t sample_n,
                                          std::uint64_t seed) {
    const std::size_t q = schema.size();
    require(global.size() == q, ErrorKind::SchemaMismatch, "global statistics do not match the schema");
    require(!locals.empty(), ErrorKind::InvalidArgument, "no client statistics");
    require(sample_n >= 1, ErrorKind::InvalidArgument, "sample_n must be positive");

    DivergenceMatrix out;
    out.entries = Matrix::Zero(static_cast<Eigen::Index>(locals.size()), static_cast<Eigen::Index>(q));
    for (const auto& m : schema) {
        out.columns.push_back(m.name);
        out.kinds.push_back(m.kind);
    }
    std::vector<std::vector<std::string>> categories(q);
    for (std::size_t j = 0; j < q; ++j) {
        const bool cat = schema[j].kind == ColumnKind::Categorical;
        require(cat == std::holds_alternative<CategoricalStats>(global[j]), ErrorKind::SchemaMismatch,
                "global statistic kind differs for column '" + schema[j].name + "'");
        if (cat)
            for (const auto& [token, _] : std::get<CategoricalStats>(global[j]).counts) categories[j].push_back(token);
    }

    for (std::size_t i = 0; i < locals.size(); ++i) {
        out.client_ids.push_back(i);
        require(locals[i].columns.size() == q, ErrorKind::SchemaMismatch,
                "client " + std::to_string(i) + " reports " + std::to_string(locals[i].columns.size()) + " columns");
        for (std::size_t j = 0; j < q; ++j) {
            double entry = 0.0;
            if (schema[j].kind == ColumnKind::Categorical) {
                const auto* local = std::get_if<CategoricalStats>(&locals[i].columns[j]);
                require(local != nullptr, ErrorKind::SchemaMismatch,
                        "client " + std::to_string(i) + " sent no frequencies for '" + schema[j].name + "'");
                const auto p = detail::normalized_counts(*local, categories[j]);
                const auto g = detail::normalized_counts(std::get<CategoricalStats>(global[j]), categories[j]);
                entry = jsd(p, g);
            } else {
                const auto* local = std::get_if<GmmParams>(&locals[i].columns[j]);
                require(local != nullptr, ErrorKind::SchemaMismatch,
                        "client " + std::to_string(i) + " sent no mixture for '" + schema[j].name + "'");
                const auto u = sample_gmm(*local, sample_n, derive_seed(seed, Stream::Divergence, {j, 0}));
                const auto v = sample_gmm(std::get<GmmParams>(global[j]), sample_n,
                                          derive_seed(seed, Stream::Divergence, {j, 1}));
                entry = wd_empirical(u, v);
            }
            out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry;
        }
    }
    return out;
}

/// How similarity and data quantity are combined into SD_i.
enum class Fusion { Multiplicative, Additive };

inline std::string_view to_string(Fusion f) { return f == Fusion::Multiplicative ? "multiplicative" : "additive"; }

inline Fusion parse_fusion(std::string_view s) {
    if (s == "multiplicative") return Fusion::Multiplicative;
    if (s == "additive") return Fusion::Additive;
    throw Error(ErrorKind::Config, "unknown fusion '" + std::string(s) + "'");
}

struct WeightTrace {
    Matrix normalized;
    std::vector<double> row_sums;  // SS_i
    std::vector<double> fused;     // SD_i
    std::vector<double> weights;   // W_i
};

inline std::vector<double> softmax(std::span<const double> x) {
    const double shift = *std::max_element(x.begin(), x.end());
    std::vector<double> e(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += e[i] = std::exp(x[i] - shift);
    for (auto& v : e) v /= total;
    return e;
}

/// Turns divergences and row counts into aggregation weights:
///   1. column-normalize S (an all-zero column becomes uniform 1/P),
///   2. SS_i = row sums,
///   3. SD_i = (N_i / N) * (1 - SS_i / sum_k SS_k)   (or the sum of the two terms),
///   4. W = softmax(SD).
inline WeightTrace client_weights(const DivergenceMatrix& s, std::span<const std::uint64_t> counts,
                                  Fusion fusion = Fusion::Multiplicative) {
    const std::size_t p = s.clients();
    const std::size_t q = s.column_count();
    require(p >= 1, ErrorKind::InvalidArgument, "divergence matrix has no clients");
    require(counts.size() == p, ErrorKind::InvalidArgument,
            std::to_string(counts.size()) + " counts for " + std::to_string(p) + " clients");
    double n_all = 0.0;
    for (auto c : counts) {
        require(c > 0, ErrorKind::InvalidArgument, "client row counts must be positive");
        n_all += static_cast<double>(c);
    }
    for (Eigen::Index i = 0; i < s.entries.size(); ++i)
        require(std::isfinite(s.entries.data()[i]) && s.entries.data()[i] >= 0.0, ErrorKind::InvalidArgument,
                "divergences must be finite and non-negative");

    WeightTrace t;
    t.normalized = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    for (std::size_t j = 0; j < q; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        double total = 0.0;
        for (std::size_t i = 0; i < p; ++i) total += s.entries(static_cast<Eigen::Index>(i), col);
        for (std::size_t i = 0; i < p; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            t.normalized(row, col) = total > 0.0 ? s.entries(row, col) / total : 1.0 / static_cast<double>(p);
        }
    }

    t.row_sums.resize(p);
    double ss_total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < q; ++j) ss += t.normalized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        t.row_sums[i] = ss;
        ss_total += ss;
    }

    t.fused.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double ratio = static_cast<double>(counts[i]) / n_all;
        const double similarity = ss_total > 0.0 ? 1.0 - t.row_sums[i] / ss_total : 1.0;
        t.fused[i] = fusion == Fusion::Multiplicative ? ratio * similarity : ratio + similarity;
    }
    t.weights = softmax(t.fused);
    return t;
}

}  // namespace fedtgan
