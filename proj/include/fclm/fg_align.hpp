#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fclm/feature_grid.hpp"
#include "fclm/image.hpp"

namespace fclm {

inline constexpr double kDefaultExchangeRatio = 0.25;

/// Patch-level mask, grid rows x cols, values in [0, 1].
struct PatchMask {
    DenseMatrix values;

    PatchGrid grid() const { return {values.rows(), values.cols()}; }
};

/// Mean of the covered pixels per patch. Throws when the image does not
/// divide into the grid.
template <class Tag>
PatchMask patchify_mask(const Plane<Tag>& mask, PatchGrid grid);

class NoForegroundError : public std::runtime_error {
public:
    NoForegroundError() : std::runtime_error("no foreground") {}
};

/// Tokens kept by a patch mask; indices ascending.
struct ForegroundTokenSet {
    DenseMatrix tokens;  // K x D
    std::vector<std::size_t> indices;

    std::size_t count() const { return indices.size(); }
};

/// Keeps the tokens whose mask value is > 0. Throws NoForegroundError when
/// nothing survives.
ForegroundTokenSet filter_foreground_tokens(const FeatureGrid& features, const PatchMask& mask);

/// Filters both grids with the intersection of their masks so that both sides
/// keep the same K. Writes a warning to stderr when the masks differ.
std::pair<ForegroundTokenSet, ForegroundTokenSet> filter_foreground_pair(
    const FeatureGrid& a, const PatchMask& mask_a, const FeatureGrid& b, const PatchMask& mask_b);

struct TokenExchange {
    FeatureGrid a;
    FeatureGrid b;
    std::vector<std::size_t> swapped;  // ascending
};

/// Indices picked by exchange_tokens: floor(ratio * count) distinct indices,
/// uniform without replacement, ascending.
std::vector<std::size_t> exchange_indices(std::size_t token_count, double ratio, std::uint64_t seed);

/// Swaps token i of a and b at floor(ratio * P) seeded indices.
TokenExchange exchange_tokens(const FeatureGrid& a, const FeatureGrid& b, double ratio,
                              std::uint64_t seed);

/// C[i, j] = 1 - cos(a_i, b_j).
DenseMatrix cost_matrix_cosine(const ForegroundTokenSet& a, const ForegroundTokenSet& b);
DenseMatrix cost_matrix_cosine(const DenseMatrix& a, const DenseMatrix& b);

/// Uniform 1/K weights.
struct EmpiricalDistribution {
    std::vector<double> weights;

    static EmpiricalDistribution uniform(std::size_t k);
    std::size_t size() const { return weights.size(); }
};

struct SinkhornOptions {
    double reg = 0.05;
    std::size_t max_iters = 500;
    double marginal_tol = 1e-6;
    /// Warm-start the potentials with 20 sweeps at each of c_max / 2,
    /// c_max / 4, ... above reg. Counts against max_iters.
    bool epsilon_scaling = false;
};

struct TransportPlan {
    DenseMatrix pi;
    DenseMatrix cost;
    double reg = 0.0;
    std::size_t iterations_used = 0;
    double row_residual = 0.0;  // |pi 1 - u_a|_1
    double col_residual = 0.0;  // |pi^T 1 - u_b|_1
    std::vector<double> f;      // dual potentials
    std::vector<double> g;

    /// <pi, C>_F
    double transport_cost() const;
    /// <pi, C> + reg * sum pi (ln pi - 1): the entropic objective whose
    /// gradient with respect to C is pi.
    double entropic_objective() const;
};

class SinkhornError : public std::runtime_error {
public:
    SinkhornError(double residual, std::size_t iterations);
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Log-domain Sinkhorn-Knopp scaling for pi = diag(u) exp(-C/reg) diag(v).
/// Stops once both L1 marginal residuals are <= marginal_tol (checked after
/// each sweep at reg); after max_iters a residual above 10 * marginal_tol
/// throws SinkhornError.
TransportPlan sinkhorn_plan(const DenseMatrix& cost, const EmpiricalDistribution& u_a,
                            const EmpiricalDistribution& u_b, const SinkhornOptions& options = {});

/// <pi*, C> for the Sinkhorn plan between uniform measures on both sets.
double ot_loss(const ForegroundTokenSet& a, const ForegroundTokenSet& b,
               const SinkhornOptions& options = {});

struct OtGrad {
    double loss = 0.0;
    TransportPlan plan;
    DenseMatrix d_a;  // K x D
    DenseMatrix d_b;
};
/// ot_loss plus the envelope gradient: pi* is held fixed and dL/dC = pi* is
/// pushed through the cosine cost.
OtGrad ot_loss_grad(const DenseMatrix& a, const DenseMatrix& b, const SinkhornOptions& options = {});

}  // namespace fclm
