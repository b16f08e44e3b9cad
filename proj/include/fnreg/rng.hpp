#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fnreg {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for a path of stream labels below `master`. The result depends
/// only on (master, path), never on the order streams are consumed, so serial
/// and parallel runs draw the same numbers.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (auto p : path)
        s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

// Stream labels.
namespace stream {
inline constexpr std::uint64_t innovations = 1;
inline constexpr std::uint64_t coupled_primes = 2;
inline constexpr std::uint64_t gamma_replication = 3;
inline constexpr std::uint64_t auxiliary = 4;
inline constexpr std::uint64_t replication = 5;
inline constexpr std::uint64_t covariates = 6;
inline constexpr std::uint64_t noise = 7;
inline constexpr std::uint64_t lipschitz_probe = 8;
} // namespace stream

} // namespace fnreg
