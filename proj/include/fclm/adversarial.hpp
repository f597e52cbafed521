#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fclm/feature_grid.hpp"
#include "fclm/tiny_net.hpp"

namespace fclm {

/// Gradient reversal strength.
struct GrlConfig {
    double lambda = 1.0;
};

/// Identity; the reversal only acts on the backward pass.
template <class T>
const T& grl_forward(const T& x) {
    return x;
}

/// Backward pass of the reversal layer: -lambda * upstream.
std::vector<double> grl_apply(std::span<const double> upstream_gradient, const GrlConfig& cfg);

inline constexpr double kDomainA = 0.0;
inline constexpr double kDomainB = 1.0;
inline constexpr double kProbabilityClamp = 1e-9;

/// Feature grids from domain A (label 0) and domain B (label 1).
struct DomainBatch {
    std::vector<FeatureGrid> features_a;
    std::vector<FeatureGrid> features_b;
};

/// Default discriminator: Linear(dim -> hidden) -> ReLU -> Linear(hidden -> 1) -> sigmoid.
TinyNet make_discriminator(std::size_t dim, Rng& rng, std::size_t hidden = 128);

/// Mean over the tokens of a grid.
std::vector<double> mean_pool(const FeatureGrid& grid);

/// Probability that the summary comes from domain B. The last layer of h must
/// be a single sigmoid unit.
double discriminator_forward(const TinyNet& h, std::span<const double> token_summary);

struct AdversarialResult {
    double loss = 0.0;
    std::vector<double> param_grad;  // descends loss
    std::vector<DenseMatrix> grads_a;  // per grid, tokens x dim, after the reversal
    std::vector<DenseMatrix> grads_b;
    double accuracy = 0.0;  // fraction classified correctly at p >= 0.5
};

/// Domain cross-entropy over mean-pooled summaries:
///   loss = -1/2 [ mean_A ln(1 - h) + mean_B ln h ]
/// with probabilities clamped to [1e-9, 1 - 1e-9] inside the log. Token
/// gradients are what the encoder receives through the reversal layer.
AdversarialResult adversarial_loss(const TinyNet& h, const DomainBatch& batch, const GrlConfig& cfg);

/// Scalar function of a parameter vector.
using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences against an analytic gradient; returns
/// max_i |analytic_i - numeric_i| / max(1e-8, |numeric_i|).
double finite_diff_check(const ScalarFn& loss_fn, std::span<const double> params,
                         std::span<const double> analytic_gradient, double step = 1e-5);

/// Central-difference gradient of loss_fn at params.
std::vector<double> numeric_gradient(const ScalarFn& loss_fn, std::span<const double> params,
                                     double step = 1e-5);

}  // namespace fclm
