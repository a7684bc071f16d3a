#pragma once

#include <cstdint>
#include <random>

namespace bayesdecide {

using Engine = std::mt19937_64;

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of child stream `index` under `root`. Streams for different
/// indices are independent of each other and of how many are drawn.
inline std::uint64_t child_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(splitmix64(root) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine child_engine(std::uint64_t root, std::uint64_t index) {
  return Engine(child_seed(root, index));
}

// Stream namespaces so unrelated consumers of one root seed never collide.
inline constexpr std::uint64_t kBootstrapStream = 0x1000;
inline constexpr std::uint64_t kPermutationStream = 0x2000;
inline constexpr std::uint64_t kPosteriorDrawStream = 0x3000;
inline constexpr std::uint64_t kSimulationStream = 0x4000;

} // namespace rng
} // namespace bayesdecide
