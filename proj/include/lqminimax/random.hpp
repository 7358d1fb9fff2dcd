#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "lqminimax/core.hpp"

namespace lqminimax {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministically derives a child seed from a root seed and a list of
/// integer tags (stream id, cell coordinates, trial index, ...).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags);

// Named streams split from one instance seed.
inline constexpr std::uint64_t kDesignStream = 0x64657369676eULL;  // "design"
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;     // "noise"
inline constexpr std::uint64_t kBetaStream = 0x62657461ULL;        // "beta"

Vector gaussian_vector(Index n, Rng& rng, double stddev = 1.0);
Matrix gaussian_matrix(Index rows, Index cols, Rng& rng);

}  // namespace lqminimax
