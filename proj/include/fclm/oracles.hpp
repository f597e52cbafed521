#pragma once

#include "fclm/image.hpp"
#include "fclm/numerics.hpp"

// Slow reference implementations used to cross-check the library.
namespace fclm::oracles {

/// Exact optimum of the square assignment LP with uniform 1/K marginals:
/// min over permutations s of (1/K) sum_i C[i, s(i)]. K <= 8.
double lp_optimum_uniform(const DenseMatrix& cost);

/// Gradient magnitude by direct 2-D convolution with the full
/// x- and y-derivative-of-Gaussian kernels (unit L2 norm, replicate borders).
AlphaMatte gradient_magnitude_naive(const AlphaMatte& image, double sigma);
double grad_error_naive(const AlphaMatte& pred, const AlphaMatte& gt, double sigma);

/// Connectivity error with a recursive 4-neighbour flood fill per threshold.
/// Ties between largest components go to the one met first in row-major order.
double connectivity_error_flood(const AlphaMatte& pred, const AlphaMatte& gt, double step);

}  // namespace fclm::oracles
