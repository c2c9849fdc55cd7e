#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qkshots {

// SplitMix64 finalizer. Used to derive independent stream seeds from a root
// seed and a tuple of task coordinates, so that results do not depend on how
// tasks are scheduled across threads.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// derive_seed(root, {i, j, basis}) -> sub-seed. Order of coordinates matters.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(root);
    for (const std::uint64_t c : coords) {
        h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) {
    return Engine{seed};
}

}  // namespace qkshots
