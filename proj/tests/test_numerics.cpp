#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fclm/numerics.hpp"

using namespace fclm;

TEST_CASE("cosine similarity of [1,1] and [1,0]") {
    const std::vector<double> a{1, 1}, b{1, 0};
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("cosine similarity rejects zero vectors and length mismatch") {
    const std::vector<double> z{0, 0}, a{1, 2}, c{1, 2, 3};
    CHECK_THROWS(cosine_similarity(z, a));
    CHECK_THROWS(cosine_similarity(a, c));
}

TEST_CASE("cosine gradient against central differences") {
    Rng rng(3);
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    const auto g = cosine_similarity_grad(a, b);
    const double h = 1e-6;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto ap = a, am = a;
        ap[i] += h;
        am[i] -= h;
        const double num = (cosine_similarity(ap, b) - cosine_similarity(am, b)) / (2 * h);
        CHECK(g.d_a[i] == doctest::Approx(num).epsilon(1e-6));
        auto bp = b, bm = b;
        bp[i] += h;
        bm[i] -= h;
        const double numb = (cosine_similarity(a, bp) - cosine_similarity(a, bm)) / (2 * h);
        CHECK(g.d_b[i] == doctest::Approx(numb).epsilon(1e-6));
    }
}

TEST_CASE("row softmax examples") {
    DenseMatrix m(1, 2, std::vector<double>{std::log(3.0), 0.0});
    const auto s = row_softmax(m, 1.0);
    CHECK(s(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s(0, 1) == doctest::Approx(0.25).epsilon(1e-12));

    DenseMatrix flat(1, 3, 5.0);
    const auto t = row_softmax(flat, 2.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(t(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("row softmax stays finite for huge logits") {
    DenseMatrix m(2, 3, std::vector<double>{1e4, -1e4, 0.0, 1e4, 1e4 - 1, 3e3});
    const auto s = row_softmax(m, 1.0);
    CHECK(s.all_finite());
    for (std::size_t r = 0; r < 2; ++r) {
        double sum = 0;
        for (double v : s.row(r)) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("KL divergence examples") {
    const std::vector<double> p{1, 0}, q{0.5, 0.5};
    CHECK(kl_divergence(p, q) == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
    const double expected = 0.5 * std::log(0.5 / kKlFloor) + 0.5 * std::log(0.5);
    CHECK(kl_divergence(q, p) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(kl_divergence(q, q) == 0.0);
}

TEST_CASE("softmax KL matches kl_divergence of the softmaxes") {
    Rng rng(11);
    std::vector<double> s(6), t(6);
    for (auto& v : s) v = rng.normal();
    for (auto& v : t) v = rng.normal();
    for (double temp : {0.5, 1.0, 4.0}) {
        const auto r = softmax_kl(s, t, temp);
        CHECK(r.value == doctest::Approx(kl_divergence(softmax(s, temp), softmax(t, temp))).epsilon(1e-12));
    }
}

TEST_CASE("Rng is reproducible and mix_seed separates streams") {
    Rng a(5), b(5);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) == mix_seed(1, 0));
    Rng c(9);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(c.index(7) < 7);
    }
}
