#pragma once

#include <cstdint>

namespace artic {

/// SplitMix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent sub-stream of a seed, selected by tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix_seed(mix_seed(seed) ^ (tag * 0xd1342543de82ef95ULL));
}

}  // namespace artic
