#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fclm/metrics_matting.hpp"
#include "fclm/oracles.hpp"
#include "helpers.hpp"

using namespace fclm;

TEST_CASE("sad examples") {
    Rng rng(1);
    const auto p = test::random_matte(9, 9, rng);
    CHECK(sad(p, p).raw == 0.0);
    const auto big = sad(AlphaMatte(50, 20, 1.0), AlphaMatte(50, 20, 0.0));
    CHECK(big.raw == 1000.0);
    CHECK(big.scaled == 1.0);
    const AlphaMatte a(4, 1, std::vector<double>{1, 1, 0, 0});
    const AlphaMatte b(4, 1, std::vector<double>{1, 0, 0, 0});
    CHECK(sad(a, b).raw == 1.0);
    CHECK_THROWS(sad(a, AlphaMatte(2, 2)));
}

TEST_CASE("mse and mad examples") {
    const AlphaMatte a(4, 1, std::vector<double>{1, 1, 0, 0});
    const AlphaMatte b(4, 1, std::vector<double>{1, 0, 0, 0});
    const auto r = mse_mad(a, b);
    CHECK(r.mse == 0.25);
    CHECK(r.mad == 0.25);
    const auto c = mse_mad(AlphaMatte(3, 3, 0.5), AlphaMatte(3, 3, 0.0));
    CHECK(c.mse == 0.25);
    CHECK(c.mad == 0.5);
    const auto z = mse_mad(a, a);
    CHECK(z.mse == 0.0);
    CHECK(z.mad == 0.0);
}

TEST_CASE("gradient kernel taps have unit norm") {
    const auto k = gaussian_derivative_kernel(1.4);
    CHECK(k.half == 5);
    CHECK(k.smooth.size() == 11);
    double s = 0.0, d = 0.0;
    for (double v : k.smooth) s += v * v;
    for (double v : k.derivative) d += v * v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grad error examples") {
    Rng rng(2);
    const auto p = test::random_matte(12, 12, rng);
    CHECK(grad_error(p, p).raw == 0.0);
    CHECK(grad_error(AlphaMatte(8, 8, 0.2), AlphaMatte(8, 8, 0.9)).raw == doctest::Approx(0.0).epsilon(1e-20));
    CHECK_THROWS(grad_error(AlphaMatte(2, 2), AlphaMatte(2, 2)));
}

TEST_CASE("grad error: step edge against a blurred edge matches the dense oracle") {
    AlphaMatte step(16, 16), blur(16, 16);
    for (std::size_t y = 0; y < 16; ++y) {
        for (std::size_t x = 0; x < 16; ++x) {
            step(x, y) = x < 8 ? 0.0 : 1.0;
            blur(x, y) = std::clamp((static_cast<double>(x) - 5.5) / 5.0, 0.0, 1.0);
        }
    }
    const auto r = grad_error(step, blur);
    CHECK(r.raw > 0.0);
    CHECK(r.raw == doctest::Approx(oracles::grad_error_naive(step, blur, 1.4)).epsilon(1e-9));
    CHECK(r.scaled == doctest::Approx(r.raw / 1000.0).epsilon(1e-15));
}

TEST_CASE("grad error matches the dense oracle on random images") {
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        const auto p = test::random_matte(16, 16, rng);
        const auto g = test::random_matte(16, 16, rng);
        CHECK(std::abs(grad_error(p, g).raw - oracles::grad_error_naive(p, g, 1.4)) <= 1e-9);
    }
}

TEST_CASE("connectivity error examples") {
    Rng rng(4);
    const auto p = test::random_matte(8, 8, rng);
    CHECK(connectivity_error(p, p).raw == 0.0);
    CHECK(connectivity_error(AlphaMatte(8, 8), AlphaMatte(8, 8)).raw == 0.0);

    AlphaMatte gt(8, 8, 0.0);
    for (std::size_t y = 1; y < 5; ++y)
        for (std::size_t x = 1; x < 5; ++x) gt(x, y) = 1.0;
    auto pred = gt;
    pred(7, 7) = 1.0;
    const auto r = connectivity_error(pred, gt);
    CHECK(r.raw > 0.0);
    CHECK(r.raw == doctest::Approx(oracles::connectivity_error_flood(pred, gt, 0.1)).epsilon(1e-12));
    CHECK_THROWS(connectivity_error(pred, gt, 0.0));
    CHECK_THROWS(connectivity_error(pred, gt, 1.5));
}

TEST_CASE("connectivity error matches the flood-fill oracle on soft random cases") {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        const auto p = test::random_matte(8, 8, rng);
        const auto g = test::random_matte(8, 8, rng);
        CHECK(connectivity_error(p, g).raw == doctest::Approx(oracles::connectivity_error_flood(p, g, 0.1)).epsilon(1e-12));
    }
}

TEST_CASE("matting metrics are symmetric") {
    Rng rng(6);
    const auto p = test::random_matte(10, 10, rng);
    const auto g = test::random_matte(10, 10, rng);
    CHECK(sad(p, g).raw == sad(g, p).raw);
    CHECK(mse_mad(p, g).mse == mse_mad(g, p).mse);
    CHECK(mse_mad(p, g).mad == mse_mad(g, p).mad);
    CHECK(grad_error(p, g).raw == doctest::Approx(grad_error(g, p).raw).epsilon(1e-12));
}

TEST_CASE("larger perturbations give larger SAD, MSE and MAD") {
    Rng rng(7);
    auto g = test::random_matte(10, 10, rng);
    for (double& v : g.values()) v *= 0.5;
    double prev_sad = -1, prev_mse = -1, prev_mad = -1;
    for (double eps : {0.01, 0.05, 0.1, 0.2, 0.4}) {
        auto p = g;
        for (double& v : p.values()) v += eps;
        const double s = sad(p, g).raw;
        const auto m = mse_mad(p, g);
        CHECK(s > prev_sad);
        CHECK(m.mse > prev_mse);
        CHECK(m.mad > prev_mad);
        prev_sad = s;
        prev_mse = m.mse;
        prev_mad = m.mad;
    }
}

TEST_CASE("imq examples") {
    AlphaMatte inst1(6, 6, 0.0), inst2(6, 6, 0.0);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) inst1(x, y) = 1.0;
    for (std::size_t y = 3; y < 6; ++y)
        for (std::size_t x = 3; x < 6; ++x) inst2(x, y) = 0.8;
    const std::vector<AlphaMatte> gt{inst1, inst2};
    for (const auto q : {ImqQuality::mse, ImqQuality::mad, ImqQuality::grad, ImqQuality::conn}) {
        CHECK(imq(gt, gt, q) == 100.0);
    }
    CHECK(imq({}, gt, ImqQuality::mse) == 0.0);
    CHECK(imq({inst1, inst2}, {inst1}, ImqQuality::mse) == doctest::Approx(50.0).epsilon(1e-12));
    const auto detail = imq_detail({inst1, inst2}, {inst1}, ImqQuality::mad);
    CHECK(detail.matches.size() == 1);
    CHECK(detail.unmatched_pred == 1);
    CHECK_THROWS(imq({inst1}, {}, ImqQuality::mse));
    CHECK(parse_imq_quality("grad") == ImqQuality::grad);
    CHECK_THROWS(parse_imq_quality("sad"));
}

TEST_CASE("matte report bundles every metric") {
    Rng rng(8);
    const auto p = test::random_matte(12, 12, rng);
    const auto g = test::random_matte(12, 12, rng);
    const auto r = matte_report(p, g);
    CHECK(r.sad == sad(p, g).scaled);
    CHECK(r.sad_raw == sad(p, g).raw);
    CHECK(r.mse == mse_mad(p, g).mse);
    CHECK(r.grad == grad_error(p, g).scaled);
    CHECK(r.conn == connectivity_error(p, g).scaled);
    CHECK(r.pixel_count == 144);
}
