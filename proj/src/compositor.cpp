#include "fclm/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fclm/numerics.hpp"

namespace fclm {

RgbImage composite_alpha(const RgbImage& foreground, const AlphaMatte& alpha,
                         const RgbImage& background) {
    if (foreground.width() != alpha.width() || foreground.height() != alpha.height() ||
        background.width() != alpha.width() || background.height() != alpha.height()) {
        throw std::invalid_argument("composite_alpha: dimension mismatch");
    }
    RgbImage out(alpha.width(), alpha.height());
    for (std::size_t y = 0; y < alpha.height(); ++y) {
        for (std::size_t x = 0; x < alpha.width(); ++x) {
            const double a = std::clamp(alpha(x, y), 0.0, 1.0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = a * foreground.at(x, y, c) + (1.0 - a) * background.at(x, y, c);
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
            }
        }
    }
    return out;
}

std::pair<std::size_t, std::size_t> draw_background_pair(std::size_t pool_size, std::uint64_t seed) {
    if (pool_size < 2) {
        throw std::invalid_argument("make_pair: background pool needs at least 2 images, got " +
                                    std::to_string(pool_size));
    }
    Rng rng(seed);
    const std::size_t first = rng.index(pool_size);
    std::size_t second = rng.index(pool_size - 1);
    if (second >= first) {
        ++second;
    }
    return {first, second};
}

CompositePair make_pair(const RgbImage& foreground, const AlphaMatte& alpha,
                        const std::vector<Background>& pool, std::uint64_t seed) {
    const auto [ia, ib] = draw_background_pair(pool.size(), seed);
    auto fit = [&](const Background& bg) {
        if (bg.image.width() < foreground.width() || bg.image.height() < foreground.height()) {
            throw std::invalid_argument("make_pair: background '" + bg.id + "' is smaller than the foreground");
        }
        return bg.image.center_crop(foreground.width(), foreground.height());
    };
    CompositePair pair;
    pair.image_a = composite_alpha(foreground, alpha, fit(pool[ia]));
    pair.image_b = composite_alpha(foreground, alpha, fit(pool[ib]));
    pair.alpha = alpha;
    pair.background_a_id = pool[ia].id;
    pair.background_b_id = pool[ib].id;
    pair.seed = seed;
    return pair;
}

}  // namespace fclm
