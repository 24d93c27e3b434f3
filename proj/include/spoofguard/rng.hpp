// Deterministic seed derivation for independent RNG streams.
#pragma once

#include <cstdint>

namespace spoofguard {

/// splitmix64 step; a well-mixed 64-bit permutation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives the seed for sub-stream `stream` of a master seed. Distinct
/// streams give statistically independent generators; the mapping is fixed,
/// so reruns with the same master seed reproduce every stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t state = master;
    std::uint64_t a = splitmix64(state);
    state ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t b = splitmix64(state);
    return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

}  // namespace spoofguard
