#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <vector>

#include "fclm/compositor.hpp"
#include "helpers.hpp"

using namespace fclm;

namespace {

std::vector<Background> pool_of(std::size_t n, std::size_t w, std::size_t h, Rng& rng) {
    std::vector<Background> pool;
    for (std::size_t i = 0; i < n; ++i) pool.push_back({"bg" + std::to_string(i), test::random_rgb(w, h, rng)});
    return pool;
}

}  // namespace

TEST_CASE("composite_alpha examples") {
    Rng rng(1);
    const auto fg = test::random_rgb(5, 4, rng);
    const auto bg = test::random_rgb(5, 4, rng);
    CHECK(composite_alpha(fg, AlphaMatte(5, 4, 1.0), bg) == fg);
    CHECK(composite_alpha(fg, AlphaMatte(5, 4, 0.0), bg) == bg);
    const RgbImage f(1, 1, 200), b(1, 1, 100);
    const auto c = composite_alpha(f, AlphaMatte(1, 1, 0.5), b);
    CHECK(c.at(0, 0, 0) == 150);
    CHECK_THROWS(composite_alpha(fg, AlphaMatte(4, 4, 1.0), bg));
}

TEST_CASE("composite rounds half away from zero") {
    const RgbImage f(1, 1, 1), b(1, 1, 0);
    CHECK(composite_alpha(f, AlphaMatte(1, 1, 0.5), b).at(0, 0, 0) == 1);
}

TEST_CASE("make_pair draws two distinct backgrounds deterministically") {
    Rng rng(2);
    const auto fg = test::random_rgb(6, 6, rng);
    const auto alpha = test::random_matte(6, 6, rng);
    const auto two = pool_of(2, 6, 6, rng);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = make_pair(fg, alpha, two, seed);
        CHECK(std::set<std::string>{p.background_a_id, p.background_b_id} == std::set<std::string>{"bg0", "bg1"});
    }
    const auto pool = pool_of(5, 6, 6, rng);
    const auto p1 = make_pair(fg, alpha, pool, 77);
    const auto p2 = make_pair(fg, alpha, pool, 77);
    CHECK(p1.image_a == p2.image_a);
    CHECK(p1.image_b == p2.image_b);
    CHECK(p1.background_a_id == p2.background_a_id);
    CHECK(p1.background_a_id != p1.background_b_id);
    CHECK(p1.seed == 77);
    const auto [i, j] = draw_background_pair(5, 77);
    CHECK(pool[i].id == p1.background_a_id);
    CHECK(pool[j].id == p1.background_b_id);

    CHECK_THROWS(make_pair(fg, alpha, pool_of(1, 6, 6, rng), 1));
    CHECK_THROWS(make_pair(fg, alpha, pool_of(2, 5, 6, rng), 1));
}

TEST_CASE("make_pair center-crops larger backgrounds") {
    Rng rng(3);
    const auto fg = test::random_rgb(4, 4, rng);
    const auto pool = pool_of(2, 8, 6, rng);
    const auto p = make_pair(fg, AlphaMatte(4, 4, 0.0), pool, 5);
    const auto& src = p.background_a_id == "bg0" ? pool[0].image : pool[1].image;
    CHECK(p.image_a == src.center_crop(4, 4));
}

TEST_CASE("pair algebra: shared foreground and background difference") {
    Rng rng(4);
    const auto fg = test::random_rgb(12, 12, rng);
    auto alpha = test::random_matte(12, 12, rng);
    for (std::size_t i = 0; i < 20; ++i) alpha[i] = 1.0;
    for (std::size_t i = 20; i < 40; ++i) alpha[i] = 0.0;
    const auto pool = pool_of(4, 12, 12, rng);
    const auto p = make_pair(fg, alpha, pool, 9);
    const auto& ba = pool[draw_background_pair(4, 9).first].image;
    const auto& bb = pool[draw_background_pair(4, 9).second].image;
    for (std::size_t y = 0; y < 12; ++y) {
        for (std::size_t x = 0; x < 12; ++x) {
            const double a = alpha(x, y);
            for (std::size_t c = 0; c < 3; ++c) {
                const double diff = static_cast<double>(p.image_a.at(x, y, c)) - p.image_b.at(x, y, c);
                const double expect = (1.0 - a) * (static_cast<double>(ba.at(x, y, c)) - bb.at(x, y, c));
                CHECK(std::abs(diff - expect) <= 1.0);
                if (a == 1.0) CHECK(p.image_a.at(x, y, c) == p.image_b.at(x, y, c));
                if (a == 0.0) CHECK(p.image_a.at(x, y, c) == ba.at(x, y, c));
            }
        }
    }
}

TEST_CASE("compositing over black recovers the foreground at opaque pixels") {
    Rng rng(5);
    const auto fg = test::random_rgb(8, 8, rng);
    auto alpha = test::random_matte(8, 8, rng);
    for (std::size_t i = 0; i < 64; i += 3) alpha[i] = 1.0;
    const auto c = composite_alpha(fg, alpha, RgbImage(8, 8, 0));
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x)
            if (alpha(x, y) == 1.0)
                for (std::size_t ch = 0; ch < 3; ++ch) CHECK(c.at(x, y, ch) / alpha(x, y) == fg.at(x, y, ch));
}
