#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace tdn {

struct RngSeed {
    std::uint64_t value = 0;
};

// splitmix64 finalizer, used to derive independent child streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr RngSeed derive(RngSeed parent, std::uint64_t stream) {
    return RngSeed{mix64(mix64(parent.value) ^ mix64(stream + 0x632be59bd9b4e019ULL))};
}

constexpr RngSeed derive(RngSeed parent, std::uint64_t a, std::uint64_t b) {
    return derive(derive(parent, a), b);
}

using Engine = std::mt19937_64;

inline Engine make_engine(RngSeed seed) { return Engine{mix64(seed.value)}; }

inline double uniform(Engine& eng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
}

inline double normal(Engine& eng) { return std::normal_distribution<double>(0.0, 1.0)(eng); }

// Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
template <class T>
void shuffle(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(eng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace tdn
