#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fclm::checks {

inline constexpr std::uint64_t kCheckSeed = 20240611;

struct CheckOptions {
    std::uint64_t seed = kCheckSeed;
    /// Scales one analytic gradient (L1) by 1.01 to prove the suite notices.
    bool corrupt_gradient = false;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Sinkhorn at reg 1e-3 against the permutation LP on 200 instances.
CheckResult sinkhorn_lp(const CheckOptions& options = {});

struct GradientEntry {
    std::string loss;
    double max_rel_error = 0.0;
    std::size_t instances = 0;
};

struct GradientSuite {
    std::vector<GradientEntry> entries;
    double tolerance = 1e-4;
    double step = 1e-5;

    bool passed() const;
};

/// Central differences for every analytic gradient, 20 instances each.
GradientSuite gradient_suite(const CheckOptions& options = {});
CheckResult gradients(const CheckOptions& options = {});

CheckResult depth_weights_contract(const CheckOptions& options = {});
CheckResult grl_contract(const CheckOptions& options = {});
CheckResult metric_identities(const CheckOptions& options = {});
CheckResult metric_oracles(const CheckOptions& options = {});
CheckResult compositor_algebra(const CheckOptions& options = {});

/// The seven checks above, in order.
std::vector<CheckResult> run_all(const CheckOptions& options = {});

}  // namespace fclm::checks
