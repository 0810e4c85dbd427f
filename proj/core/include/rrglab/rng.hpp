#pragma once

#include <cstdint>
#include <random>

// Seed plumbing. Every Monte Carlo trial owns an independent engine seeded
// through the splitmix-style mixer below, so results are reproducible and
// independent of execution order. The mixer is the documented bit-exact
// algorithm; derive_trial_seed in experiment.hpp builds on it.

namespace rrg {

using Engine = std::mt19937_64;

// splitmix64 finalizer (Stafford mix13 variant).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derive an independent stream from (seed, tag). Used to give each random
// object inside one trial (graph, noise, signs, sets, ...) its own engine.
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag));
}

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

// Stream tags for per-trial sub-objects.
namespace seed_tag {
inline constexpr std::uint64_t kGraph = 0x67726170;      // "grap"
inline constexpr std::uint64_t kNoise = 0x6e6f6973;      // "nois"
inline constexpr std::uint64_t kSigns = 0x7369676e;      // "sign"
inline constexpr std::uint64_t kSet = 0x73657421;        // "set!"
inline constexpr std::uint64_t kSde = 0x73646521;        // "sde!"
inline constexpr std::uint64_t kVector = 0x76656374;     // "vect"
inline constexpr std::uint64_t kLanczos = 0x6c616e63;    // "lanc"
}  // namespace seed_tag

}  // namespace rrg
