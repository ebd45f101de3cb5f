#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

// All randomness in the pipeline flows from one root seed. Sub-streams are
// derived by (component name, index) so that worker scheduling can never
// change what any individual item draws. The raw mt19937_64 output sequence
// is fixed by the standard; the draw helpers below avoid the
// implementation-defined std::uniform_*_distribution so that byte-identical
// results hold across platforms and so that test oracles can replay streams.

namespace forge {

using Rng = std::mt19937_64;

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// seed' = mix(root, component, index); stable contract, do not change.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view component,
                                    std::uint64_t index) {
    std::uint64_t z = root ^ fnv1a64(component);
    return splitmix64(splitmix64(z) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Uniform integer in [0, bound) by rejection sampling (no modulo bias).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t r = rng();
    while (r >= limit) {
        r = rng();
    }
    return r % bound;
}

// Uniform real in [0, 1) with 53 bits of precision.
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace forge
