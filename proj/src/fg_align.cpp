#include "fclm/fg_align.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace fclm {

template <class Tag>
PatchMask patchify_mask(const Plane<Tag>& mask, PatchGrid grid) {
    if (grid.rows == 0 || grid.cols == 0 || mask.height() % grid.rows != 0 ||
        mask.width() % grid.cols != 0) {
        std::ostringstream msg;
        msg << "patchify_mask: " << mask.width() << "x" << mask.height()
            << " mask does not divide into a " << grid.rows << "x" << grid.cols
            << " grid; width must be a multiple of " << grid.cols << " and height a multiple of "
            << grid.rows;
        throw std::invalid_argument(msg.str());
    }
    const std::size_t ph = mask.height() / grid.rows;
    const std::size_t pw = mask.width() / grid.cols;
    PatchMask out{DenseMatrix(grid.rows, grid.cols)};
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) {
            out.values(y / ph, x / pw) += mask(x, y);
        }
    }
    for (double& v : out.values.data()) {
        v /= static_cast<double>(ph * pw);
    }
    return out;
}

template PatchMask patchify_mask(const AlphaMatte&, PatchGrid);
template PatchMask patchify_mask(const BinaryMask&, PatchGrid);

ForegroundTokenSet filter_foreground_tokens(const FeatureGrid& features, const PatchMask& mask) {
    if (mask.grid() != features.grid) {
        throw std::invalid_argument("filter_foreground_tokens: mask grid does not match the feature grid");
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < features.token_count(); ++i) {
        if (mask.values.data()[i] > 0.0) {
            keep.push_back(i);
        }
    }
    if (keep.empty()) {
        throw NoForegroundError();
    }
    ForegroundTokenSet out{DenseMatrix(keep.size(), features.dim()), keep};
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto src = features.tokens.row(keep[k]);
        std::copy(src.begin(), src.end(), out.tokens.row(k).begin());
    }
    return out;
}

std::pair<ForegroundTokenSet, ForegroundTokenSet> filter_foreground_pair(
    const FeatureGrid& a, const PatchMask& mask_a, const FeatureGrid& b, const PatchMask& mask_b) {
    if (mask_a.grid() != mask_b.grid()) {
        throw std::invalid_argument("filter_foreground_pair: mask grids differ");
    }
    PatchMask shared{DenseMatrix(mask_a.values.rows(), mask_a.values.cols())};
    bool differ = false;
    for (std::size_t i = 0; i < shared.values.size(); ++i) {
        const double va = mask_a.values.data()[i];
        const double vb = mask_b.values.data()[i];
        differ = differ || ((va > 0.0) != (vb > 0.0));
        shared.values.data()[i] = (va > 0.0 && vb > 0.0) ? 1.0 : 0.0;
    }
    if (differ) {
        std::cerr << "warning: foreground masks differ; aligning the intersection of their tokens\n";
    }
    return {filter_foreground_tokens(a, shared), filter_foreground_tokens(b, shared)};
}

std::vector<std::size_t> exchange_indices(std::size_t token_count, double ratio,
                                          std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw std::invalid_argument("exchange_tokens: ratio must lie in [0, 1]");
    }
    const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(token_count)));
    std::vector<std::size_t> pool(token_count);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Rng rng(seed);
    // partial Fisher-Yates
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.index(token_count - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

TokenExchange exchange_tokens(const FeatureGrid& a, const FeatureGrid& b, double ratio,
                              std::uint64_t seed) {
    require_same_shape(a, b, "exchange_tokens");
    TokenExchange out{a, b, exchange_indices(a.token_count(), ratio, seed)};
    for (std::size_t i : out.swapped) {
        auto ra = out.a.tokens.row(i);
        auto rb = out.b.tokens.row(i);
        std::swap_ranges(ra.begin(), ra.end(), rb.begin());
    }
    return out;
}

DenseMatrix cost_matrix_cosine(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() == 0 || a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("cost_matrix_cosine: token sets must have equal nonzero K and dim");
    }
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            c(i, j) = 1.0 - cosine_similarity(a.row(i), b.row(j));
        }
    }
    return c;
}

DenseMatrix cost_matrix_cosine(const ForegroundTokenSet& a, const ForegroundTokenSet& b) {
    return cost_matrix_cosine(a.tokens, b.tokens);
}

EmpiricalDistribution EmpiricalDistribution::uniform(std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("EmpiricalDistribution: K must be >= 1");
    }
    return {std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

double TransportPlan::transport_cost() const {
    return dot(pi.data(), cost.data());
}

double TransportPlan::entropic_objective() const {
    double h = 0.0;
    for (double p : pi.data()) {
        if (p > 0.0) {
            h += p * (std::log(p) - 1.0);
        }
    }
    return transport_cost() + reg * h;
}

SinkhornError::SinkhornError(double residual, std::size_t iterations)
    : std::runtime_error("sinkhorn did not converge after " + std::to_string(iterations) +
                         " iterations (marginal residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

namespace {

void check_distribution(const EmpiricalDistribution& u, const char* name) {
    double s = 0.0;
    for (double w : u.weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument(std::string("sinkhorn_plan: ") + name +
                                        " must have positive weights");
        }
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string("sinkhorn_plan: ") + name + " must sum to 1");
    }
}

constexpr double kScalingFactor = 0.5;
constexpr std::size_t kScalingSweeps = 20;

// reg * log sum_k exp(x_k / reg)
double soft_max(std::span<const double> x, double reg) {
    const double m = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) {
        s += std::exp((v - m) / reg);
    }
    return m + reg * std::log(s);
}

}  // namespace

TransportPlan sinkhorn_plan(const DenseMatrix& cost, const EmpiricalDistribution& u_a,
                            const EmpiricalDistribution& u_b, const SinkhornOptions& options) {
    const std::size_t n = cost.rows();
    const std::size_t m = cost.cols();
    if (n == 0 || m == 0 || u_a.size() != n || u_b.size() != m) {
        throw std::invalid_argument("sinkhorn_plan: cost and marginal sizes disagree");
    }
    if (!(options.reg > 0.0) || !std::isfinite(options.reg)) {
        throw std::invalid_argument("sinkhorn_plan: reg must be positive");
    }
    if (!cost.all_finite()) {
        throw std::invalid_argument("sinkhorn_plan: non-finite cost");
    }
    check_distribution(u_a, "u_a");
    check_distribution(u_b, "u_b");

    const double reg = options.reg;
    std::vector<double> log_a(n), log_b(m);
    for (std::size_t i = 0; i < n; ++i) log_a[i] = std::log(u_a.weights[i]);
    for (std::size_t j = 0; j < m; ++j) log_b[j] = std::log(u_b.weights[j]);

    TransportPlan plan;
    plan.cost = cost;
    plan.reg = reg;
    plan.pi = DenseMatrix(n, m);
    plan.f.assign(n, 0.0);
    plan.g.assign(m, 0.0);
    auto& f = plan.f;
    auto& g = plan.g;
    std::vector<double> scratch(std::max(n, m));

    auto residuals = [&]() {
        double row = 0.0;
        std::vector<double> col(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double p = std::exp((f[i] + g[j] - cost(i, j)) / reg);
                plan.pi(i, j) = p;
                s += p;
                col[j] += p;
            }
            row += std::abs(s - u_a.weights[i]);
        }
        double colr = 0.0;
        for (std::size_t j = 0; j < m; ++j) colr += std::abs(col[j] - u_b.weights[j]);
        plan.row_residual = row;
        plan.col_residual = colr;
        return std::max(row, colr);
    };

    auto sweep = [&](double eps) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) scratch[j] = g[j] - cost(i, j);
            f[i] = eps * log_a[i] - soft_max({scratch.data(), m}, eps);
        }
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) scratch[i] = f[i] - cost(i, j);
            g[j] = eps * log_b[j] - soft_max({scratch.data(), n}, eps);
        }
    };

    double residual = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    if (options.epsilon_scaling) {
        double c_max = 0.0;
        for (double c : cost.data()) c_max = std::max(c_max, std::abs(c));
        for (double eps = c_max * kScalingFactor; eps > reg && it < options.max_iters;
             eps *= kScalingFactor) {
            for (std::size_t k = 0; k < kScalingSweeps && it < options.max_iters; ++k, ++it) {
                sweep(eps);
            }
        }
    }
    while (it < options.max_iters) {
        sweep(reg);
        ++it;
        residual = residuals();
        if (residual <= options.marginal_tol) {
            break;
        }
    }
    if (std::isinf(residual)) {
        residual = residuals();
    }
    plan.iterations_used = it;
    if (residual > options.marginal_tol && residual > 10.0 * options.marginal_tol) {
        throw SinkhornError(residual, it);
    }
    return plan;
}

double ot_loss(const ForegroundTokenSet& a, const ForegroundTokenSet& b,
               const SinkhornOptions& options) {
    return ot_loss_grad(a.tokens, b.tokens, options).loss;
}

OtGrad ot_loss_grad(const DenseMatrix& a, const DenseMatrix& b, const SinkhornOptions& options) {
    const DenseMatrix cost = cost_matrix_cosine(a, b);
    const auto u = EmpiricalDistribution::uniform(a.rows());
    OtGrad out;
    out.plan = sinkhorn_plan(cost, u, u, options);
    out.loss = out.plan.transport_cost();
    out.d_a = DenseMatrix(a.rows(), a.cols());
    out.d_b = DenseMatrix(b.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double w = out.plan.pi(i, j);
            if (w == 0.0) {
                continue;
            }
            // C = 1 - cos, so dC = -dcos
            const auto g = cosine_similarity_grad(a.row(i), b.row(j));
            auto da = out.d_a.row(i);
            auto db = out.d_b.row(j);
            for (std::size_t k = 0; k < a.cols(); ++k) {
                da[k] -= w * g.d_a[k];
                db[k] -= w * g.d_b[k];
            }
        }
    }
    return out;
}

}  // namespace fclm
