#pragma once

#include <random>

#include "fedtgan/random.hpp"
#include "fedtgan/table.hpp"

namespace fedtgan {

/// Seeded mixed-type table used by demos and tests: two categorical columns
/// (3 and 5 tokens, skewed) and two bimodal continuous columns. The first
/// continuous column's mode depends on the first categorical column.
inline Table make_mixed_table(std::size_t rows, std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Fixture);
    std::discrete_distribution<int> colour({0.5, 0.3, 0.2});
    std::discrete_distribution<int> grade({0.35, 0.25, 0.2, 0.15, 0.05});
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    static const char* kColours[] = {"red", "green", "blue"};
    static const char* kGrades[] = {"A", "B", "C", "D", "E"};

    CategoricalColumn c1, c2;
    ContinuousColumn x1, x2;
    for (std::size_t i = 0; i < rows; ++i) {
        const int c = colour(rng);
        c1.emplace_back(kColours[c]);
        c2.emplace_back(kGrades[grade(rng)]);
        const double p_high = c == 0 ? 0.2 : (c == 1 ? 0.6 : 0.9);
        x1.push_back(unit(rng) < p_high ? 8.0 + 1.5 * std_normal(rng) : 1.0 * std_normal(rng));
        x2.push_back(unit(rng) < 0.3 ? -5.0 + 0.5 * std_normal(rng) : 5.0 + 2.0 * std_normal(rng));
    }
    return Table({{"colour", ColumnKind::Categorical, 0},
                  {"grade", ColumnKind::Categorical, 1},
                  {"load", ColumnKind::Continuous, 2},
                  {"score", ColumnKind::Continuous, 3}},
                 {std::move(c1), std::move(c2), std::move(x1), std::move(x2)});
}

}  // namespace fedtgan
