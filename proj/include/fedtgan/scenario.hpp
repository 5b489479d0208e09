#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fedtgan/error.hpp"
#include "fedtgan/random.hpp"
#include "fedtgan/table.hpp"

namespace fedtgan {

enum class ScenarioMode { FullCopy, ImbalancedIid, RepeatedRowAblation, IidEqual };

inline std::string_view to_string(ScenarioMode mode) {
    switch (mode) {
        case ScenarioMode::FullCopy: return "full_copy";
        case ScenarioMode::ImbalancedIid: return "imbalanced_iid";
        case ScenarioMode::RepeatedRowAblation: return "repeated_row_ablation";
        case ScenarioMode::IidEqual: return "iid_equal";
    }
    return "unknown";
}

inline ScenarioMode parse_scenario_mode(std::string_view s) {
    for (auto m : {ScenarioMode::FullCopy, ScenarioMode::ImbalancedIid, ScenarioMode::RepeatedRowAblation,
                   ScenarioMode::IidEqual})
        if (to_string(m) == s) return m;
    throw Error(ErrorKind::Config, "unknown scenario mode '" + std::string(s) + "'");
}

struct ScenarioSpec {
    ScenarioMode mode = ScenarioMode::FullCopy;
    std::size_t client_count = 1;
    /// Per-client row counts. Ignored for FullCopy (every shard is the whole table).
    std::vector<std::size_t> sizes;
    std::uint64_t seed = 0;
};

/// Row counts each client ends up with under `spec` for a source table of
/// `source_rows` rows.
inline std::vector<std::size_t> shard_sizes(const ScenarioSpec& spec, std::size_t source_rows) {
    if (spec.mode == ScenarioMode::FullCopy) return std::vector<std::size_t>(spec.client_count, source_rows);
    return spec.sizes;
}

namespace detail {

inline std::vector<std::size_t> sample_with_replacement(std::size_t population, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, population - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

}  // namespace detail

/// Materializes each client's local shard. Client i draws from its own
/// generator seeded with `spec.seed ^ i`, so adding clients leaves the
/// existing shards untouched.
inline std::vector<Table> partition(const Table& table, const ScenarioSpec& spec) {
    require(spec.client_count > 0, ErrorKind::InvalidArgument, "client_count must be positive");
    require(table.rows() > 0, ErrorKind::EmptyTable, "cannot partition an empty table");

    std::vector<Table> shards;
    shards.reserve(spec.client_count);
    if (spec.mode == ScenarioMode::FullCopy) {
        for (std::size_t i = 0; i < spec.client_count; ++i) shards.push_back(table);
        return shards;
    }

    require(spec.sizes.size() == spec.client_count, ErrorKind::InvalidArgument,
            "sizes has " + std::to_string(spec.sizes.size()) + " entries for " +
                std::to_string(spec.client_count) + " clients");
    for (std::size_t i = 0; i < spec.client_count; ++i)
        require(spec.sizes[i] > 0, ErrorKind::InvalidArgument, "client " + std::to_string(i) + " has size 0");

    for (std::size_t i = 0; i < spec.client_count; ++i) {
        const std::uint64_t client_seed = spec.seed ^ static_cast<std::uint64_t>(i);
        const bool repeated = spec.mode == ScenarioMode::RepeatedRowAblation && i + 1 == spec.client_count;
        std::vector<std::size_t> idx;
        if (repeated) {
            const auto row = detail::sample_with_replacement(table.rows(), 1, client_seed).front();
            idx.assign(spec.sizes[i], row);
        } else {
            idx = detail::sample_with_replacement(table.rows(), spec.sizes[i], client_seed);
        }
        shards.push_back(table.select_rows(idx));
    }
    return shards;
}

}  // namespace fedtgan
