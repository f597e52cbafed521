#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fclm/adversarial.hpp"
#include "fclm/depth_distill.hpp"
#include "helpers.hpp"

using namespace fclm;

namespace {

FeatureGrid grid_of(std::size_t rows, std::size_t cols, DenseMatrix tokens) {
    return FeatureGrid({rows, cols}, std::move(tokens));
}

FeatureGrid random_grid(std::size_t rows, std::size_t cols, std::size_t dim, Rng& rng) {
    return grid_of(rows, cols, test::random_matrix(rows * cols, dim, rng));
}

DepthWeightPair weights_of(std::vector<double> plus, std::vector<double> minus, std::size_t rows,
                           std::size_t cols) {
    DepthWeightPair w;
    w.d_plus = DenseMatrix(rows, cols, std::move(plus));
    w.d_minus = DenseMatrix(rows, cols, std::move(minus));
    return w;
}

}  // namespace

TEST_CASE("depth weights: hand-evaluated 2x2 example") {
    const DepthMap depth(2, 2, std::vector<double>{0.8, 0.2, 0.25, 1.0});
    const auto w = compute_depth_weights(depth, 0.25, {2, 2});
    CHECK(w.d_plus(0, 0) == 0.8);
    CHECK(w.d_plus(0, 1) == 0.0);
    CHECK(w.d_plus(1, 0) == 0.0);
    CHECK(w.d_plus(1, 1) == 1.0);
    CHECK(w.d_minus(0, 0) == 0.0);
    // (0.25 - 0.2) / 0.25 is 0.19999999999999996 in binary floating point
    CHECK(w.d_minus(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(w.d_minus(1, 0) == 0.0);
    CHECK(w.d_minus(1, 1) == 0.0);
}

TEST_CASE("depth weights: constant maps") {
    const auto ones = compute_depth_weights(DepthMap(4, 4, 1.0), 0.25, {2, 2});
    for (double v : ones.d_plus.data()) CHECK(v == 1.0);
    for (double v : ones.d_minus.data()) CHECK(v == 0.0);
    const auto zeros = compute_depth_weights(DepthMap(4, 4, 0.0), 0.25, {2, 2});
    for (double v : zeros.d_plus.data()) CHECK(v == 0.0);
    for (double v : zeros.d_minus.data()) CHECK(v == 1.0);
}

TEST_CASE("depth weights: strict mode and bad grids") {
    CHECK_THROWS_AS(compute_depth_weights(DepthMap(2, 2, 0.0), 0.25, {2, 2}, true), EmptyForegroundError);
    CHECK_NOTHROW(compute_depth_weights(DepthMap(2, 2, 0.0), 0.25, {2, 2}, false));
    CHECK_THROWS(compute_depth_weights(DepthMap(5, 4, 0.5), 0.25, {2, 2}));
}

TEST_CASE("depth weights: partition and monotonicity on random maps") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        DepthMap depth(6, 6);
        for (double& v : depth.values()) v = rng.uniform();
        const auto w = compute_depth_weights(depth, 0.25, {6, 6});
        for (std::size_t y = 0; y < 6; ++y) {
            for (std::size_t x = 0; x < 6; ++x) {
                CHECK(w.d_plus(y, x) * w.d_minus(y, x) == 0.0);
                CHECK((w.d_plus(y, x) > 0.0) == (depth(x, y) > 0.25));
            }
        }
        for (std::size_t i = 0; i < depth.size(); ++i) {
            for (std::size_t j = 0; j < depth.size(); ++j) {
                if (depth[i] > 0.25 && depth[j] > 0.25 && depth[i] > depth[j]) {
                    CHECK(w.d_plus.data()[i] >= w.d_plus.data()[j]);
                }
            }
        }
    }
}

TEST_CASE("normalize_depth divides by the maximum") {
    const auto n = normalize_depth(DepthMap(2, 1, std::vector<double>{2.0, 4.0}));
    CHECK(n[0] == 0.5);
    CHECK(n[1] == 1.0);
    const auto z = normalize_depth(DepthMap(2, 1, 0.0));
    CHECK(z[0] == 0.0);
}

TEST_CASE("meta_project: identity net passes nonnegative tokens through") {
    Rng rng(2);
    DenseMatrix t(4, 3);
    for (double& v : t.data()) v = rng.uniform();
    const auto g = grid_of(2, 2, t);
    const auto out = meta_project(g, MetaNet::identity(3));
    CHECK(out == g);
}

TEST_CASE("meta_project: context cancelling the token leaves the bias path") {
    const auto g = grid_of(1, 1, DenseMatrix(1, 2, std::vector<double>{0.7, -1.3}));
    auto net = MetaNet::identity(2);
    net.context = {-0.7, 1.3};
    const auto out = meta_project(g, net);
    CHECK(out.tokens(0, 0) == 0.0);
    CHECK(out.tokens(0, 1) == 0.0);
}

TEST_CASE("meta_project: output shape and dimension checks") {
    Rng rng(4);
    const auto net = MetaNet::create(5, 7, 3, rng);
    const auto out = meta_project(random_grid(2, 3, 5, rng), net);
    CHECK(out.grid == PatchGrid{2, 3});
    CHECK(out.tokens.rows() == 6);
    CHECK(out.dim() == 3);
    CHECK_THROWS(meta_project(random_grid(2, 3, 4, rng), net));
}

TEST_CASE("kd_loss_plain examples") {
    Rng rng(8);
    const auto sa = random_grid(2, 2, 4, rng);
    const auto sb = random_grid(2, 2, 4, rng);
    CHECK(kd_loss_plain(sa, sb, sa, sb) == doctest::Approx(0.0).epsilon(1e-9));

    const auto s = grid_of(1, 1, DenseMatrix(1, 2, std::vector<double>{std::log(3.0), 0.0}));
    const auto t = grid_of(1, 1, DenseMatrix(1, 2, 0.0));
    const double single = kd_loss_plain(s, t, t, t);
    CHECK(single == doctest::Approx(0.1308).epsilon(1e-3));
    const double hand = 0.75 * std::log(0.75 / 0.5) + 0.25 * std::log(0.25 / 0.5);
    CHECK(single == doctest::Approx(hand).epsilon(1e-12));

    const auto ta = random_grid(2, 2, 4, rng);
    CHECK(kd_loss_plain(sa, sb, ta, sb) == doctest::Approx(kd_distance(sa, ta, 1.0)).epsilon(1e-12));
    CHECK_THROWS(kd_loss_plain(sa, random_grid(1, 2, 4, rng), ta, sb));
}

TEST_CASE("kd_distance is the per-token mean of softmax KL") {
    Rng rng(12);
    const auto s = random_grid(2, 3, 5, rng);
    const auto t = random_grid(2, 3, 5, rng);
    for (double temp : {1.0, 2.0}) {
        double sum = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            sum += kl_divergence(softmax(s.tokens.row(i), temp), softmax(t.tokens.row(i), temp));
        }
        CHECK(kd_distance(s, t, temp) == doctest::Approx(sum / 6.0).epsilon(1e-12));
    }
}

TEST_CASE("kd_loss_depth_aware: zero weights give zero") {
    Rng rng(5);
    const auto s = random_grid(2, 2, 4, rng);
    const auto t = random_grid(2, 2, 4, rng);
    const auto fg = MetaNet::create(4, 6, 4, rng);
    const auto bg = MetaNet::create(4, 6, 4, rng);
    const auto w = weights_of(std::vector<double>(4, 0.0), std::vector<double>(4, 0.0), 2, 2);
    CHECK(kd_loss_depth_aware(s, t, w, fg, bg) == 0.0);
}

TEST_CASE("kd_loss_depth_aware: exact projection gives zero") {
    Rng rng(6);
    DenseMatrix t(4, 3);
    for (double& v : t.data()) v = rng.uniform();
    const auto teacher = grid_of(2, 2, t);
    const auto student = teacher;
    const auto w = weights_of(std::vector<double>(4, 1.0), std::vector<double>(4, 0.0), 2, 2);
    const auto bg = MetaNet::create(3, 4, 3, rng);
    CHECK(kd_loss_depth_aware(student, teacher, w, MetaNet::identity(3), bg) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("kd_loss_depth_aware: two tokens split between the nets") {
    Rng rng(9);
    const auto s = random_grid(1, 2, 4, rng);
    const auto t = random_grid(1, 2, 4, rng);
    const auto fg = MetaNet::create(4, 5, 4, rng);
    const auto bg = MetaNet::create(4, 5, 4, rng);
    const auto w = weights_of({1.0, 0.0}, {0.0, 1.0}, 1, 2);
    const auto pf = meta_project(t, fg);
    const auto pb = meta_project(t, bg);
    const double fg_term = kl_divergence(softmax(s.tokens.row(0), 1.0), softmax(pf.tokens.row(0), 1.0));
    const double bg_term = kl_divergence(softmax(s.tokens.row(1), 1.0), softmax(pb.tokens.row(1), 1.0));
    CHECK(kd_loss_depth_aware(s, t, w, fg, bg) == doctest::Approx(fg_term + bg_term).epsilon(1e-12));
}

TEST_CASE("kd_loss_depth_aware: full foreground weights reduce to the plain distance") {
    Rng rng(10);
    const auto s = random_grid(2, 2, 4, rng);
    const auto t = random_grid(2, 2, 4, rng);
    const auto fg = MetaNet::create(4, 5, 4, rng);
    const auto bg = MetaNet::create(4, 5, 4, rng);
    const auto w = weights_of(std::vector<double>(4, 1.0), std::vector<double>(4, 0.0), 2, 2);
    CHECK(kd_loss_depth_aware(s, t, w, fg, bg) ==
          doctest::Approx(kd_distance(s, meta_project(t, fg), 1.0)).epsilon(1e-12));
}

TEST_CASE("kd_loss_depth_aware: invariant under a joint token permutation") {
    Rng rng(13);
    const auto s = random_grid(2, 2, 3, rng);
    const auto t = random_grid(2, 2, 3, rng);
    const auto fg = MetaNet::create(3, 4, 3, rng);
    const auto bg = MetaNet::create(3, 4, 3, rng);
    const auto w = weights_of({0.9, 0.0, 0.3, 0.0}, {0.0, 0.5, 0.0, 1.0}, 2, 2);
    const std::vector<std::size_t> perm{3, 1, 0, 2};
    DenseMatrix ps(4, 3), pt(4, 3), wp(2, 2), wm(2, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        std::copy(s.tokens.row(perm[i]).begin(), s.tokens.row(perm[i]).end(), ps.row(i).begin());
        std::copy(t.tokens.row(perm[i]).begin(), t.tokens.row(perm[i]).end(), pt.row(i).begin());
        wp.data()[i] = w.d_plus.data()[perm[i]];
        wm.data()[i] = w.d_minus.data()[perm[i]];
    }
    DepthWeightPair pw;
    pw.d_plus = wp;
    pw.d_minus = wm;
    CHECK(kd_loss_depth_aware(grid_of(2, 2, ps), grid_of(2, 2, pt), pw, fg, bg) ==
          doctest::Approx(kd_loss_depth_aware(s, t, w, fg, bg)).epsilon(1e-12));
}

TEST_CASE("kd_loss_depth_aware: grid mismatch throws") {
    Rng rng(14);
    const auto s = random_grid(2, 2, 3, rng);
    const auto t = random_grid(2, 2, 3, rng);
    const auto fg = MetaNet::create(3, 4, 3, rng);
    const auto w = weights_of({1.0, 0.0}, {0.0, 1.0}, 1, 2);
    CHECK_THROWS(kd_loss_depth_aware(s, t, w, fg, fg));
}

TEST_CASE("kd_loss_depth_aware_grad matches finite differences for the meta-nets") {
    Rng rng(15);
    const auto s = random_grid(2, 2, 3, rng);
    const auto t = random_grid(2, 2, 3, rng);
    const auto fg = MetaNet::create(3, 4, 3, rng);
    const auto bg = MetaNet::create(3, 4, 3, rng);
    const auto w = weights_of({0.9, 0.0, 0.3, 0.0}, {0.0, 0.5, 0.0, 1.0}, 2, 2);
    const auto g = kd_loss_depth_aware_grad(s, t, w, fg, bg);
    CHECK(g.loss == doctest::Approx(kd_loss_depth_aware(s, t, w, fg, bg)).epsilon(1e-12));
    const ScalarFn f_fg = [&](std::span<const double> p) {
        auto n = fg;
        n.set_parameters(p);
        return kd_loss_depth_aware(s, t, w, n, bg);
    };
    CHECK(finite_diff_check(f_fg, fg.parameters(), g.d_fg_net) < 1e-4);
    const ScalarFn f_bg = [&](std::span<const double> p) {
        auto n = bg;
        n.set_parameters(p);
        return kd_loss_depth_aware(s, t, w, fg, n);
    };
    CHECK(finite_diff_check(f_bg, bg.parameters(), g.d_bg_net) < 1e-4);
}
