#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace flipsim {

/// Engine used by every stochastic component. The distributions below are
/// written out by hand so that a seed produces the same stream on any
/// standard library.
using Rng = std::mt19937_64;

/// Independent randomness consumers inside one experiment cell.
enum class StreamTag : std::uint64_t {
    map = 1,
    env = 2,
    learner = 3,
    adversary = 4,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for one component stream of the cell (master, map_index, run_index).
/// Streams with different tags are decorrelated, so attaching or detaching
/// a consumer never shifts the draws seen by another one.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t map_index,
                          std::uint64_t run_index, StreamTag tag) noexcept;

/// Uniform on [0, 1) with 53 bits of resolution.
double uniform01(Rng& rng) noexcept;

/// Uniform on (0, 1]. Used where the comparison is `draw <= p`, so that
/// p = 0 never fires and p = 1 always does.
double uniform01_open_low(Rng& rng) noexcept;

/// Unbiased integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n) noexcept;

}  // namespace flipsim
