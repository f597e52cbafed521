#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fclm/image.hpp"

namespace fclm {

/// C = alpha F + (1 - alpha) B per channel, rounded half away from zero.
RgbImage composite_alpha(const RgbImage& foreground, const AlphaMatte& alpha,
                         const RgbImage& background);

struct Background {
    std::string id;
    RgbImage image;
};

struct CompositePair {
    RgbImage image_a;
    RgbImage image_b;
    AlphaMatte alpha;
    std::string background_a_id;
    std::string background_b_id;
    std::uint64_t seed = 0;
};

/// Composites the foreground over two distinct seeded draws from the pool.
/// Larger backgrounds are center-cropped; smaller ones are rejected.
CompositePair make_pair(const RgbImage& foreground, const AlphaMatte& alpha,
                        const std::vector<Background>& pool, std::uint64_t seed);

/// Pool indices (first, second) drawn by make_pair for this seed.
std::pair<std::size_t, std::size_t> draw_background_pair(std::size_t pool_size, std::uint64_t seed);

}  // namespace fclm
