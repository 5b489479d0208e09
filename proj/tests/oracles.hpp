#pragma once

// Reference computations used only by tests. Each one takes a different
// route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// JSD via entropies: H(m) - (H(p) + H(q)) / 2, in bits, then square root.
inline double jsd_entropy(const std::vector<double>& p, const std::vector<double>& q) {
    auto h = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x)
            if (v > 0.0) s -= v * std::log(v) / std::log(2.0);
        return s;
    };
    std::vector<double> m(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) m[k] = 0.5 * (p[k] + q[k]);
    const double d = h(m) - 0.5 * (h(p) + h(q));
    return std::sqrt(std::max(d, 0.0));
}

/// Minimum-cost perfect matching between equal-size samples, by trying every
/// permutation.
inline double wd_exhaustive_matching(std::vector<double> u, std::vector<double> v) {
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) cost += std::abs(u[i] - v[perm[i]]);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(u.size());
}

/// Integral of |F_u(x) - F_v(x)| dx over the merged support.
inline double wd_cdf_integral(const std::vector<double>& u, const std::vector<double>& v) {
    std::vector<double> pts(u);
    pts.insert(pts.end(), v.begin(), v.end());
    std::sort(pts.begin(), pts.end());
    auto cdf = [](const std::vector<double>& s, double x) {
        double c = 0.0;
        for (double y : s) c += y <= x ? 1.0 : 0.0;
        return c / static_cast<double>(s.size());
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        total += std::abs(cdf(u, pts[k]) - cdf(v, pts[k])) * (pts[k + 1] - pts[k]);
    return total;
}

/// Central differences of a scalar function of a parameter vector.
template <class F>
std::vector<double> finite_difference(F&& f, std::vector<double> x, double eps = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x[k];
        x[k] = keep + eps;
        const double hi = f(x);
        x[k] = keep - eps;
        const double lo = f(x);
        x[k] = keep;
        g[k] = (hi - lo) / (2.0 * eps);
    }
    return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fedtgan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream(path) << content;
    return path;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
