#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "fclm/image.hpp"

namespace fclm {

/// Matting errors are reported raw and divided by 1000 (the usual table unit).
inline constexpr double kMattingScale = 1000.0;
inline constexpr double kGradSigma = 1.4;
inline constexpr double kConnStep = 0.1;

struct SadResult {
    double raw = 0.0;
    double scaled = 0.0;  // raw / 1000
};

struct MseMad {
    double mse = 0.0;
    double mad = 0.0;
};

struct GradResult {
    double raw = 0.0;
    double scaled = 0.0;
};

struct ConnResult {
    double raw = 0.0;
    double scaled = 0.0;
};

struct MatteReport {
    double sad = 0.0;  // scaled
    double mse = 0.0;
    double mad = 0.0;
    double grad = 0.0;  // scaled
    double conn = 0.0;  // scaled
    double sad_raw = 0.0;
    double grad_raw = 0.0;
    double conn_raw = 0.0;
    std::size_t pixel_count = 0;
};

SadResult sad(const AlphaMatte& pred, const AlphaMatte& gt);
MseMad mse_mad(const AlphaMatte& pred, const AlphaMatte& gt);

/// Separable first-derivative-of-Gaussian kernels: smoothing taps and
/// derivative taps, each unit L2 norm, half width ceil(3 sigma).
struct GaussianDerivativeKernel {
    std::vector<double> smooth;
    std::vector<double> derivative;
    int half = 0;
};
GaussianDerivativeKernel gaussian_derivative_kernel(double sigma);

/// Per-pixel gradient magnitude, convolution with replicate borders.
AlphaMatte gradient_magnitude(const AlphaMatte& image, double sigma = kGradSigma);

/// sum over pixels of (|grad pred| - |grad gt|)^2.
GradResult grad_error(const AlphaMatte& pred, const AlphaMatte& gt, double sigma = kGradSigma);

/// Connectivity degradation summed over pixels, thresholds step, 2 step, ...
/// up to 1; largest 4-connected component of {pred >= t} & {gt >= t}.
ConnResult connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt, double step = kConnStep);

MatteReport matte_report(const AlphaMatte& pred, const AlphaMatte& gt, double sigma = kGradSigma,
                         double conn_step = kConnStep);

enum class ImqQuality { mse, mad, grad, conn };
ImqQuality parse_imq_quality(std::string_view name);

struct ImqMatch {
    std::size_t pred = 0;
    std::size_t gt = 0;
    double iou = 0.0;
    double score = 0.0;
};

struct ImqResult {
    double imq = 0.0;  // [0, 100]
    std::vector<ImqMatch> matches;
    std::size_t unmatched_pred = 0;
    std::size_t unmatched_gt = 0;
};

/// Instance matting quality: greedy one-to-one matching by descending IoU of
/// the 0.5-binarized instances (IoU > 0 required), matched pairs scored
/// 1 / (1 + error), misses and false positives score 0.
ImqResult imq_detail(const std::vector<AlphaMatte>& pred_instances,
                     const std::vector<AlphaMatte>& gt_instances, ImqQuality quality);
double imq(const std::vector<AlphaMatte>& pred_instances, const std::vector<AlphaMatte>& gt_instances,
           ImqQuality quality);

}  // namespace fclm
