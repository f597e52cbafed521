#include <doctest.h>

#include <cmath>
#include <vector>

#include "fclm/adversarial.hpp"
#include "fclm/fg_align.hpp"
#include "fclm/oracles.hpp"
#include "helpers.hpp"

using namespace fclm;

namespace {

ForegroundTokenSet token_set(std::size_t k, std::size_t d, std::vector<double> values) {
    ForegroundTokenSet s;
    s.tokens = DenseMatrix(k, d, std::move(values));
    for (std::size_t i = 0; i < k; ++i) s.indices.push_back(i);
    return s;
}

FeatureGrid random_grid(std::size_t rows, std::size_t cols, std::size_t dim, Rng& rng) {
    return FeatureGrid({rows, cols}, test::random_matrix(rows * cols, dim, rng));
}

double off_diagonal_mass(const DenseMatrix& pi) {
    double s = 0.0;
    for (std::size_t i = 0; i < pi.rows(); ++i)
        for (std::size_t j = 0; j < pi.cols(); ++j)
            if (i != j) s += pi(i, j);
    return s;
}

}  // namespace

TEST_CASE("patchify_mask examples") {
    const auto zeros = patchify_mask(BinaryMask(32, 32, 0.0), {2, 2});
    for (double v : zeros.values.data()) CHECK(v == 0.0);
    const auto ones = patchify_mask(BinaryMask(32, 32, 1.0), {2, 2});
    for (double v : ones.values.data()) CHECK(v == 1.0);
    const auto quarter = patchify_mask(BinaryMask(2, 2, std::vector<double>{1, 0, 0, 0}), {1, 1});
    CHECK(quarter.values(0, 0) == 0.25);
    CHECK_THROWS_AS(patchify_mask(AlphaMatte(5, 4, 0.0), {2, 2}), std::invalid_argument);
}

TEST_CASE("filter_foreground_tokens examples") {
    Rng rng(1);
    const auto g = random_grid(2, 2, 3, rng);
    PatchMask m{DenseMatrix(2, 2, std::vector<double>{1, 0, 0, 0.5})};
    const auto kept = filter_foreground_tokens(g, m);
    CHECK(kept.count() == 2);
    CHECK(kept.indices == std::vector<std::size_t>{0, 3});
    CHECK(kept.tokens(1, 2) == g.tokens(3, 2));

    PatchMask all{DenseMatrix(2, 2, 0.3)};
    CHECK(filter_foreground_tokens(g, all).count() == 4);
    PatchMask none{DenseMatrix(2, 2, 0.0)};
    CHECK_THROWS_AS(filter_foreground_tokens(g, none), NoForegroundError);
}

TEST_CASE("filter_foreground_tokens is equivariant under joint permutation") {
    Rng rng(2);
    const auto g = random_grid(2, 3, 2, rng);
    const std::vector<double> mv{0.0, 1.0, 0.2, 0.0, 0.7, 1.0};
    const std::vector<std::size_t> perm{4, 0, 5, 2, 1, 3};  // new position i holds old perm[i]
    DenseMatrix pt(6, 2), pm(2, 3);
    for (std::size_t i = 0; i < 6; ++i) {
        pt(i, 0) = g.tokens(perm[i], 0);
        pt(i, 1) = g.tokens(perm[i], 1);
        pm.data()[i] = mv[perm[i]];
    }
    const auto orig = filter_foreground_tokens(g, {DenseMatrix(2, 3, mv)});
    const auto moved = filter_foreground_tokens(FeatureGrid({2, 3}, pt), {pm});
    REQUIRE(orig.count() == moved.count());
    for (std::size_t k = 0; k < moved.count(); ++k) {
        const std::size_t old = perm[moved.indices[k]];
        bool found = false;
        for (std::size_t j = 0; j < orig.count(); ++j) {
            if (orig.indices[j] == old) {
                found = true;
                CHECK(orig.tokens(j, 0) == moved.tokens(k, 0));
                CHECK(orig.tokens(j, 1) == moved.tokens(k, 1));
            }
        }
        CHECK(found);
    }
}

TEST_CASE("filter_foreground_pair intersects differing masks") {
    Rng rng(3);
    const auto a = random_grid(1, 4, 2, rng);
    const auto b = random_grid(1, 4, 2, rng);
    PatchMask ma{DenseMatrix(1, 4, std::vector<double>{1, 1, 0, 1})};
    PatchMask mb{DenseMatrix(1, 4, std::vector<double>{1, 0, 0, 1})};
    const auto [fa, fb] = filter_foreground_pair(a, ma, b, mb);
    CHECK(fa.indices == std::vector<std::size_t>{0, 3});
    CHECK(fb.indices == std::vector<std::size_t>{0, 3});
}

TEST_CASE("exchange_tokens examples") {
    Rng rng(4);
    const auto a = random_grid(2, 4, 3, rng);
    const auto b = random_grid(2, 4, 3, rng);

    const auto none = exchange_tokens(a, b, 0.0, 1);
    CHECK(none.a == a);
    CHECK(none.b == b);
    CHECK(none.swapped.empty());

    const auto all = exchange_tokens(a, b, 1.0, 1);
    CHECK(all.a == b);
    CHECK(all.b == a);

    const auto quarter = exchange_tokens(a, b, 0.25, 42);
    CHECK(quarter.swapped.size() == 2);
    CHECK(quarter.swapped[0] < quarter.swapped[1]);
    CHECK(exchange_tokens(a, b, 0.25, 42).swapped == quarter.swapped);
    for (std::size_t i = 0; i < 8; ++i) {
        const bool swapped = i == quarter.swapped[0] || i == quarter.swapped[1];
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(quarter.a.tokens(i, d) == (swapped ? b : a).tokens(i, d));
            CHECK(quarter.b.tokens(i, d) == (swapped ? a : b).tokens(i, d));
        }
    }

    const auto back = exchange_tokens(quarter.a, quarter.b, 0.25, 42);
    CHECK(back.a == a);
    CHECK(back.b == b);

    CHECK_THROWS(exchange_tokens(a, random_grid(1, 4, 3, rng), 0.25, 1));
}

TEST_CASE("exchange_indices are distinct and seed-dependent") {
    const auto i1 = exchange_indices(100, 0.25, 1);
    CHECK(i1.size() == 25);
    for (std::size_t k = 1; k < i1.size(); ++k) CHECK(i1[k - 1] < i1[k]);
    CHECK(exchange_indices(100, 0.25, 2) != i1);
    CHECK(exchange_indices(7, 0.25, 1).size() == 1);
}

TEST_CASE("cosine cost matrix examples") {
    Rng rng(5);
    ForegroundTokenSet a;
    a.tokens = test::random_matrix(3, 4, rng);
    a.indices = {0, 1, 2};
    const auto c = cost_matrix_cosine(a, a);
    for (std::size_t i = 0; i < 3; ++i) CHECK(c(i, i) == doctest::Approx(0.0).epsilon(1e-12));
    for (double v : c.data()) CHECK((v >= -1e-12 && v <= 2.0 + 1e-12));

    CHECK(cost_matrix_cosine(token_set(1, 2, {1, 0}), token_set(1, 2, {0, 1}))(0, 0) == doctest::Approx(1.0));
    CHECK(cost_matrix_cosine(token_set(1, 2, {-1, 0}), token_set(1, 2, {1, 0}))(0, 0) == doctest::Approx(2.0));
    CHECK_THROWS(cost_matrix_cosine(token_set(1, 2, {0, 0}), token_set(1, 2, {1, 0})));
}

TEST_CASE("sinkhorn examples") {
    const auto u1 = EmpiricalDistribution::uniform(1);
    const auto one = sinkhorn_plan(DenseMatrix(1, 1, 3.7), u1, u1);
    CHECK(one.pi(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    const auto u2 = EmpiricalDistribution::uniform(2);
    const DenseMatrix c(2, 2, std::vector<double>{0, 1, 1, 0});
    const auto diag = sinkhorn_plan(c, u2, u2, {0.01, 500, 1e-6, false});
    CHECK(off_diagonal_mass(diag.pi) < 1e-3);
    CHECK(diag.pi(0, 0) == doctest::Approx(0.5).epsilon(1e-3));

    const auto flat = sinkhorn_plan(DenseMatrix(2, 2, 0.6), u2, u2);
    for (double v : flat.pi.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("sinkhorn marginals are within tolerance on return") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng.index(6);
        DenseMatrix c(k, k);
        for (double& v : c.data()) v = 2.0 * rng.uniform();
        const auto u = EmpiricalDistribution::uniform(k);
        const auto plan = sinkhorn_plan(c, u, u, {0.05, 1000000, 1e-6, true});
        CHECK(plan.row_residual <= 1e-6);
        CHECK(plan.col_residual <= 1e-6);
        double rows = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (double v : plan.pi.row(i)) s += v;
            rows += std::abs(s - 1.0 / static_cast<double>(k));
        }
        CHECK(rows <= 1e-6);
    }
}

TEST_CASE("sinkhorn reports non-convergence") {
    Rng rng(7);
    DenseMatrix c(4, 4);
    for (double& v : c.data()) v = 2.0 * rng.uniform();
    const auto u = EmpiricalDistribution::uniform(4);
    CHECK_THROWS_AS(sinkhorn_plan(c, u, u, {1e-3, 1, 1e-12, false}), SinkhornError);
}

TEST_CASE("sinkhorn at small reg approaches the LP optimum") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 2 + rng.index(3);
        ForegroundTokenSet a, b;
        a.tokens = test::random_matrix(k, 8, rng);
        b.tokens = test::random_matrix(k, 8, rng);
        for (std::size_t i = 0; i < k; ++i) {
            a.indices.push_back(i);
            b.indices.push_back(i);
        }
        const double lp = oracles::lp_optimum_uniform(cost_matrix_cosine(a, b));
        const double ot = ot_loss(a, b, {1e-3, 100000, 1e-6, true});
        CHECK(std::abs(ot - lp) <= 5e-3);
    }
}

TEST_CASE("ot_loss examples") {
    CHECK(ot_loss(token_set(1, 2, {1, 0}), token_set(1, 2, {0, 1})) == doctest::Approx(1.0).epsilon(1e-9));

    const auto a = token_set(2, 2, {1, 0, -1, 0});
    const auto b = token_set(2, 2, {1, 0, -1, 0});
    const auto c = cost_matrix_cosine(a, b);
    CHECK(c(0, 1) == doctest::Approx(2.0));
    CHECK(ot_loss(a, b, {0.01, 500, 1e-6, false}) < 0.01);
}

TEST_CASE("ot_loss of a set with itself shrinks with reg") {
    Rng rng(9);
    ForegroundTokenSet a;
    a.tokens = test::random_matrix(4, 8, rng);
    a.indices = {0, 1, 2, 3};
    double prev = INFINITY;
    for (double reg : {1.0, 0.1, 0.01, 0.001}) {
        const double l = ot_loss(a, a, {reg, 100000, 1e-9, true});
        CHECK(l <= reg * std::log(4.0) + 1e-6);
        CHECK(l <= prev);
        prev = l;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("ot_loss_grad holds the plan fixed") {
    Rng rng(10);
    const auto a = test::random_matrix(3, 4, rng);
    const auto b = test::random_matrix(3, 4, rng);
    const SinkhornOptions opts{0.1, 100000, 1e-12, false};
    const auto g = ot_loss_grad(a, b, opts);
    const auto pi = g.plan.pi;
    const ScalarFn fixed_plan = [&](std::span<const double> p) {
        DenseMatrix aa(3, 4, std::vector<double>(p.begin(), p.end()));
        const auto c = cost_matrix_cosine(aa, b);
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += pi.data()[i] * c.data()[i];
        return s;
    };
    CHECK(finite_diff_check(fixed_plan, a.data(), g.d_a.data()) < 1e-6);
}
