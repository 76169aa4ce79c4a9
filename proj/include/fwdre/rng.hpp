#pragma once

// Reproducible random substreams keyed by (seed, path[, node, branch]).

#include <cstdint>
#include <random>

namespace fwdre {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t k : {a, b, c}) {
        s = h ^ (k + 0x632BE59BD9B4E019ull);
        h = splitmix64(s);
    }
    return h;
}

inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    std::uint64_t s = mix_key(seed, path);
    std::seed_seq seq{std::uint32_t(s), std::uint32_t(s >> 32), std::uint32_t(splitmix64(s)),
                      std::uint32_t(splitmix64(s) >> 32)};
    return std::mt19937_64(seq);
}

// Sub-path stream for nested estimators. node and branch are offset by one so
// they never collide with the outer (seed, path) stream.
inline std::mt19937_64 branch_rng(std::uint64_t seed, std::uint64_t path, std::uint64_t node, std::uint64_t branch) {
    std::uint64_t s = mix_key(seed, path, node + 1, branch + 1);
    std::seed_seq seq{std::uint32_t(s), std::uint32_t(s >> 32), std::uint32_t(splitmix64(s)),
                      std::uint32_t(splitmix64(s) >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace fwdre
