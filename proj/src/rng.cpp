#include "bicm/rng.hpp"

#include <limits>

namespace bicm {

std::uint64_t RngStream::below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    // reject the top partial block so every residue is equally likely
    constexpr std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % bound + 1) % bound;
    std::uint64_t x = engine_();
    while (x > limit) x = engine_();
    return x % bound;
}

}  // namespace bicm
