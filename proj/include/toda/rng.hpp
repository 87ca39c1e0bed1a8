#pragma once

#include <cstdint>
#include <random>

namespace toda {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// independent stream per (seed, stream id)
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
    std::seed_seq seq{std::uint32_t(splitmix64(x)), std::uint32_t(splitmix64(x)), std::uint32_t(splitmix64(x)),
                      std::uint32_t(splitmix64(x))};
    return std::mt19937_64(seq);
}

}  // namespace toda
