#include "fclm/adversarial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fclm {

std::vector<double> grl_apply(std::span<const double> upstream_gradient, const GrlConfig& cfg) {
    if (!(cfg.lambda >= 0.0)) {
        throw std::invalid_argument("grl_apply: lambda must be >= 0");
    }
    std::vector<double> out(upstream_gradient.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = -cfg.lambda * upstream_gradient[i];
    }
    return out;
}

TinyNet make_discriminator(std::size_t dim, Rng& rng, std::size_t hidden) {
    const std::array<std::size_t, 3> dims{dim, hidden, 1};
    const std::array<Activation, 2> acts{Activation::relu, Activation::sigmoid};
    return TinyNet::random(dims, acts, rng, std::sqrt(2.0));
}

std::vector<double> mean_pool(const FeatureGrid& grid) {
    if (grid.token_count() == 0) {
        throw std::invalid_argument("mean_pool: empty grid");
    }
    std::vector<double> out(grid.dim(), 0.0);
    for (std::size_t t = 0; t < grid.token_count(); ++t) {
        const auto row = grid.tokens.row(t);
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] += row[k];
        }
    }
    for (double& v : out) {
        v /= static_cast<double>(grid.token_count());
    }
    return out;
}

namespace {

void check_discriminator(const TinyNet& h) {
    if (h.layers().empty() || h.output_dim() != 1 ||
        h.layers().back().activation != Activation::sigmoid) {
        throw std::invalid_argument("discriminator: last layer must be one sigmoid unit");
    }
}

}  // namespace

double discriminator_forward(const TinyNet& h, std::span<const double> token_summary) {
    check_discriminator(h);
    return h.forward(token_summary)[0];
}

AdversarialResult adversarial_loss(const TinyNet& h, const DomainBatch& batch, const GrlConfig& cfg) {
    check_discriminator(h);
    if (batch.features_a.empty() || batch.features_b.empty()) {
        throw std::invalid_argument("adversarial_loss: empty batch");
    }
    if (!(cfg.lambda >= 0.0)) {
        throw std::invalid_argument("adversarial_loss: lambda must be >= 0");
    }
    AdversarialResult out;
    out.param_grad.assign(h.parameter_count(), 0.0);
    std::size_t correct = 0;
    NetTrace trace;

    auto run_side = [&](const std::vector<FeatureGrid>& grids, double label,
                        std::vector<DenseMatrix>& token_grads) {
        const double weight = 0.5 / static_cast<double>(grids.size());
        for (const auto& grid : grids) {
            const auto summary = mean_pool(grid);
            const double p = h.forward(summary, trace)[0];
            const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
            out.loss -= weight * (label == kDomainB ? std::log(pc) : std::log(1.0 - pc));
            if ((p >= 0.5) == (label == kDomainB)) {
                ++correct;
            }
            // d/dz of the cross-entropy through the sigmoid
            const std::array<double, 1> dz{weight * (p - label)};
            const auto d_summary = h.backward(trace, dz, out.param_grad, GradientAt::last_preactivation);
            const auto reversed = grl_apply(d_summary, cfg);
            DenseMatrix g(grid.token_count(), grid.dim());
            const double share = 1.0 / static_cast<double>(grid.token_count());
            for (std::size_t t = 0; t < grid.token_count(); ++t) {
                auto row = g.row(t);
                for (std::size_t k = 0; k < row.size(); ++k) {
                    row[k] = reversed[k] * share;
                }
            }
            token_grads.push_back(std::move(g));
        }
    };
    run_side(batch.features_a, kDomainA, out.grads_a);
    run_side(batch.features_b, kDomainB, out.grads_b);
    out.accuracy = static_cast<double>(correct) /
                   static_cast<double>(batch.features_a.size() + batch.features_b.size());
    return out;
}

std::vector<double> numeric_gradient(const ScalarFn& loss_fn, std::span<const double> params,
                                     double step) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("finite differences: step must be positive");
    }
    std::vector<double> theta(params.begin(), params.end());
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + step;
        const double up = loss_fn(theta);
        theta[i] = saved - step;
        const double down = loss_fn(theta);
        theta[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw std::runtime_error("finite differences: non-finite loss at coordinate " +
                                     std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double finite_diff_check(const ScalarFn& loss_fn, std::span<const double> params,
                         std::span<const double> analytic_gradient, double step) {
    if (analytic_gradient.size() != params.size()) {
        throw std::invalid_argument("finite_diff_check: gradient size mismatch");
    }
    const auto numeric = numeric_gradient(loss_fn, params, step);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double err =
            std::abs(analytic_gradient[i] - numeric[i]) / std::max(1e-8, std::abs(numeric[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace fclm
