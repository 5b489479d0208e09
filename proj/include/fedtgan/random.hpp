#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedtgan {

using Rng = std::mt19937_64;

/// Stream tags keep independently-seeded random streams apart.
enum class Stream : std::uint64_t {
    LocalGmm = 1,
    GlobalGmm,
    Divergence,
    GenInit,
    DiscInit,
    Shuffle,
    Noise,
    Gumbel,
    Eval,
    Swap,
    Fixture,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for a (base, stream, indices...) tuple. Seeds derived
/// for different index tuples are decorrelated, so work can be reordered or
/// parallelized without changing any draw.
inline std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                                 std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(stream)));
    for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t base, Stream stream, std::initializer_list<std::uint64_t> indices = {}) {
    return Rng(derive_seed(base, stream, indices));
}

}  // namespace fedtgan
