#include "flipsim/rng.hpp"

namespace flipsim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t map_index,
                          std::uint64_t run_index, StreamTag tag) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ map_index);
    h = splitmix64(h ^ run_index);
    return splitmix64(h ^ static_cast<std::uint64_t>(tag));
}

double uniform01(Rng& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform01_open_low(Rng& rng) noexcept {
    return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

std::size_t uniform_index(Rng& rng, std::size_t n) noexcept {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    // Reject the low tail so every residue is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) {
            return static_cast<std::size_t>(r % bound);
        }
    }
}

}  // namespace flipsim
