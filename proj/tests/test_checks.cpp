#include <doctest.h>

#include <algorithm>

#include "fclm/checks.hpp"
#include "fclm/fg_align.hpp"
#include "fclm/oracles.hpp"

using namespace fclm;

TEST_CASE("permutation LP oracle on small hand cases") {
    CHECK(oracles::lp_optimum_uniform(DenseMatrix(2, 2, std::vector<double>{0, 1, 1, 0})) == 0.0);
    CHECK(oracles::lp_optimum_uniform(DenseMatrix(2, 2, std::vector<double>{1, 0, 0, 1})) == 0.0);
    CHECK(oracles::lp_optimum_uniform(DenseMatrix(2, 2, std::vector<double>{1, 3, 2, 5})) == doctest::Approx(2.5));
    CHECK(oracles::lp_optimum_uniform(DenseMatrix(3, 3, std::vector<double>{4, 1, 3, 2, 0, 5, 3, 2, 2})) ==
          doctest::Approx(5.0 / 3.0));
}

TEST_CASE("every built-in check passes") {
    const auto results = checks::run_all();
    REQUIRE(results.size() == 7);
    const std::vector<std::string> names{"sinkhorn_lp",       "gradients",      "depth_weights", "grl",
                                         "metric_identities", "metric_oracles", "compositor"};
    for (std::size_t i = 0; i < results.size(); ++i) {
        CHECK(results[i].name == names[i]);
        INFO(results[i].name << ": " << results[i].detail);
        CHECK(results[i].passed);
    }
}

TEST_CASE("gradient suite covers every loss and notices a corrupted gradient") {
    const auto suite = checks::gradient_suite();
    std::vector<std::string> losses;
    for (const auto& e : suite.entries) {
        losses.push_back(e.loss);
        CHECK(e.instances == 20);
        CHECK(e.max_rel_error <= suite.tolerance);
    }
    for (const char* name : {"kd_plain", "kd_depth_aware", "adversarial", "ot_envelope", "l1", "laplacian", "bce", "iou"}) {
        CHECK(std::find(losses.begin(), losses.end(), name) != losses.end());
    }
    checks::CheckOptions bad;
    bad.corrupt_gradient = true;
    const auto broken = checks::gradient_suite(bad);
    CHECK_FALSE(broken.passed());
    for (const auto& e : broken.entries) CHECK((e.max_rel_error > broken.tolerance) == (e.loss == "l1"));
}
