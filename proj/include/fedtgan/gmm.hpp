#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "fedtgan/error.hpp"
#include "fedtgan/random.hpp"

namespace fedtgan {

inline constexpr std::size_t kDefaultMaxModes = 10;
inline constexpr double kVarianceFloor = 1e-4;
inline const double kStdFloor = std::sqrt(kVarianceFloor);
inline constexpr double kPruneWeight = 0.005;
inline constexpr std::size_t kMaxEmIterations = 100;
inline constexpr double kEmTolerance = 1e-5;
/// Upper bound on the pooled sample the federator refits a global mixture on.
inline constexpr std::size_t kMaxPooledDraws = 200'000;

/// One-dimensional Gaussian mixture.
struct GmmParams {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t modes() const noexcept { return weights.size(); }

    void validate(std::size_t max_modes = kDefaultMaxModes) const {
        const std::size_t k = weights.size();
        require(k >= 1 && means.size() == k && stds.size() == k, ErrorKind::InvalidArgument,
                "mixture needs equal-length, non-empty weight/mean/std lists");
        require(k <= max_modes, ErrorKind::InvalidArgument,
                "mixture has " + std::to_string(k) + " modes, limit is " + std::to_string(max_modes));
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            require(std::isfinite(weights[i]) && weights[i] >= 0.0, ErrorKind::InvalidArgument,
                    "mixture weight must be finite and non-negative");
            require(std::isfinite(means[i]), ErrorKind::InvalidArgument, "mixture mean must be finite");
            require(std::isfinite(stds[i]) && stds[i] > 0.0, ErrorKind::InvalidArgument,
                    "mixture std must be finite and positive");
            total += weights[i];
        }
        require(std::abs(total - 1.0) <= 1e-9, ErrorKind::InvalidArgument, "mixture weights must sum to 1");
    }

    friend bool operator==(const GmmParams&, const GmmParams&) = default;
};

/// log(weight_k) + log N(x; mean_k, std_k), without the shared -log(sqrt(2 pi)).
inline double weighted_log_density(const GmmParams& g, std::size_t k, double x) {
    const double z = (x - g.means[k]) / g.stds[k];
    return std::log(g.weights[k]) - std::log(g.stds[k]) - 0.5 * z * z;
}

namespace detail {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct EmFit {
    GmmParams params;
    double log_likelihood = -std::numeric_limits<double>::infinity();
};

inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::vector<double> kmeans_pp_centers(std::span<const double> x, std::size_t k, Rng& rng) {
    std::vector<double> centers;
    centers.reserve(k);
    std::uniform_int_distribution<std::size_t> first(0, x.size() - 1);
    centers.push_back(x[first(rng)]);
    std::vector<double> d2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d2[i] = (x[i] - centers[0]) * (x[i] - centers[0]);
    while (centers.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        if (total <= 0.0) break;
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t pick = x.size() - 1;
        for (std::size_t i = 0; i < x.size(); ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(x[pick]);
        for (std::size_t i = 0; i < x.size(); ++i) d2[i] = std::min(d2[i], (x[i] - x[pick]) * (x[i] - x[pick]));
    }
    return centers;
}

inline GmmParams init_from_kmeans(std::span<const double> x, std::size_t k, Rng& rng) {
    auto centers = kmeans_pp_centers(x, k, rng);
    k = centers.size();
    std::vector<std::size_t> assign(x.size(), 0);
    for (int iter = 0; iter < 20; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::size_t best = 0;
            double best_d = std::abs(x[i] - centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = std::abs(x[i] - centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            changed = changed || assign[i] != best;
            assign[i] = best;
        }
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum[assign[i]] += x[i];
            ++cnt[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (cnt[c]) centers[c] = sum[c] / static_cast<double>(cnt[c]);
        if (!changed && iter > 0) break;
    }

    GmmParams g;
    std::vector<double> sum(k, 0.0), sq(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++cnt[assign[i]];
        sum[assign[i]] += x[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t c = assign[i];
        const double d = x[i] - sum[c] / static_cast<double>(cnt[c]);
        sq[c] += d * d;
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (!cnt[c]) continue;
        const double n = static_cast<double>(cnt[c]);
        g.weights.push_back(n / static_cast<double>(x.size()));
        g.means.push_back(sum[c] / n);
        g.stds.push_back(std::sqrt(std::max(sq[c] / n, kVarianceFloor)));
    }
    return g;
}

inline EmFit run_em(std::span<const double> x, GmmParams g) {
    const std::size_t n = x.size();
    std::size_t k = g.modes();
    std::vector<double> resp(n * k);
    std::vector<double> row(k);
    double prev = -std::numeric_limits<double>::infinity();
    double ll = prev;
    for (std::size_t iter = 0; iter < kMaxEmIterations; ++iter) {
        // E-step
        double total_ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c)
                row[c] = g.weights[c] > 0.0 ? weighted_log_density(g, c, x[i])
                                            : -std::numeric_limits<double>::infinity();
            const double lse = log_sum_exp(row);
            total_ll += lse;
            for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(row[c] - lse);
        }
        ll = total_ll / static_cast<double>(n) - kHalfLog2Pi;
        // M-step
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0, s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + c];
                s += resp[i * k + c] * x[i];
            }
            if (nk < 1e-12) {
                g.weights[c] = 0.0;
                continue;
            }
            const double mean = s / nk;
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) var += resp[i * k + c] * (x[i] - mean) * (x[i] - mean);
            g.weights[c] = nk / static_cast<double>(n);
            g.means[c] = mean;
            g.stds[c] = std::sqrt(std::max(var / nk, kVarianceFloor));
        }
        if (std::abs(ll - prev) < kEmTolerance) break;
        prev = ll;
    }
    return {std::move(g), ll * static_cast<double>(n)};
}

inline GmmParams prune_and_normalize(const GmmParams& g) {
    GmmParams out;
    double best = -1.0;
    std::size_t best_k = 0;
    for (std::size_t c = 0; c < g.modes(); ++c) {
        if (g.weights[c] > best) {
            best = g.weights[c];
            best_k = c;
        }
        if (g.weights[c] < kPruneWeight) continue;
        out.weights.push_back(g.weights[c]);
        out.means.push_back(g.means[c]);
        out.stds.push_back(g.stds[c]);
    }
    if (out.weights.empty()) {
        out.weights = {1.0};
        out.means = {g.means[best_k]};
        out.stds = {g.stds[best_k]};
    }
    const double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    for (auto& w : out.weights) w /= total;
    return out;
}

}  // namespace detail

/// Fits a 1-D mixture with at most `max_modes` components. Each candidate
/// size K is fitted by EM from a k-means++ start; the size with the lowest
/// BIC wins, then components lighter than 0.005 are pruned.
inline GmmParams fit_gmm(std::span<const double> values, std::size_t max_modes, std::uint64_t seed) {
    require(!values.empty(), ErrorKind::InvalidArgument, "cannot fit a mixture to an empty sample");
    require(max_modes >= 1, ErrorKind::InvalidArgument, "max_modes must be at least 1");
    for (double v : values) require(std::isfinite(v), ErrorKind::InvalidArgument, "non-finite value in sample");

    std::set<double> distinct;
    for (double v : values) {
        distinct.insert(v);
        if (distinct.size() > max_modes) break;
    }
    if (distinct.size() == 1) return GmmParams{{1.0}, {values.front()}, {kStdFloor}};

    const std::size_t k_max = std::min(max_modes, distinct.size());
    const double n = static_cast<double>(values.size());
    GmmParams best;
    double best_bic = std::numeric_limits<double>::infinity();
    std::size_t since_improvement = 0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        Rng rng = make_rng(seed, Stream::LocalGmm, {k});
        auto fit = detail::run_em(values, detail::init_from_kmeans(values, k, rng));
        const double params = 3.0 * static_cast<double>(fit.params.modes()) - 1.0;
        const double bic = -2.0 * fit.log_likelihood + params * std::log(n);
        if (bic < best_bic) {
            best_bic = bic;
            best = std::move(fit.params);
            since_improvement = 0;
        } else if (++since_improvement >= 3) {
            break;
        }
    }
    return detail::prune_and_normalize(best);
}

inline GmmParams fit_gmm(std::span<const double> values, std::uint64_t seed) {
    return fit_gmm(values, kDefaultMaxModes, seed);
}

inline std::vector<double> sample_gmm(const GmmParams& gmm, std::size_t n, std::uint64_t seed) {
    gmm.validate(std::numeric_limits<std::size_t>::max());
    require(n >= 1, ErrorKind::InvalidArgument, "sample count must be positive");
    Rng rng(seed);
    std::discrete_distribution<std::size_t> pick(gmm.weights.begin(), gmm.weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) {
        const std::size_t k = pick(rng);
        v = gmm.means[k] + gmm.stds[k] * normal(rng);
    }
    return out;
}

struct LocalMixture {
    GmmParams gmm;
    std::size_t rows = 0;
};

/// Refits a global mixture from client mixtures alone: draws N_i points from
/// each client's model, pools them and fits afresh. When the pooled total
/// would exceed kMaxPooledDraws every N_i is scaled down proportionally.
inline GmmParams aggregate_gmm(std::span<const LocalMixture> locals, std::size_t max_modes, std::uint64_t seed) {
    require(!locals.empty(), ErrorKind::InvalidArgument, "no client mixtures to aggregate");
    std::size_t total = 0;
    for (const auto& l : locals) {
        require(l.rows >= 1, ErrorKind::InvalidArgument, "client row count must be positive");
        total += l.rows;
    }
    const double scale = total > kMaxPooledDraws ? static_cast<double>(kMaxPooledDraws) / static_cast<double>(total) : 1.0;

    std::vector<double> pooled;
    for (std::size_t i = 0; i < locals.size(); ++i) {
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(locals[i].rows) * scale)));
        auto draws = sample_gmm(locals[i].gmm, n, derive_seed(seed, Stream::GlobalGmm, {i}));
        pooled.insert(pooled.end(), draws.begin(), draws.end());
    }
    return fit_gmm(pooled, max_modes, derive_seed(seed, Stream::GlobalGmm, {locals.size()}));
}

}  // namespace fedtgan
