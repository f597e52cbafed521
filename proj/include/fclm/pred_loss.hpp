#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "fclm/image.hpp"

namespace fclm {

/// A loss value with its gradient with respect to the prediction pixels.
struct LossGrad {
    double value = 0.0;
    std::vector<double> grad;
};

inline constexpr std::size_t kDefaultPyramidLevels = 5;
inline constexpr double kBceClamp = 1e-7;
inline constexpr double kIouSmoothing = 1.0;

double l1_matte_loss(const AlphaMatte& pred, const AlphaMatte& gt);
LossGrad l1_matte_loss_grad(const AlphaMatte& pred, const AlphaMatte& gt);

/// Bands of a Gaussian-Laplacian pyramid (5-tap binomial kernel, reflect
/// padding, factor-2 decimation). Band levels-1 is the coarse residual.
std::vector<AlphaMatte> laplacian_pyramid(const AlphaMatte& image, std::size_t levels);

/// sum_i 2^i * mean |Lap_i(pred) - Lap_i(gt)|
double laplacian_pyramid_loss(const AlphaMatte& pred, const AlphaMatte& gt,
                              std::size_t levels = kDefaultPyramidLevels);
LossGrad laplacian_pyramid_loss_grad(const AlphaMatte& pred, const AlphaMatte& gt,
                                     std::size_t levels = kDefaultPyramidLevels);

/// Mean binary cross-entropy with pred clamped to [1e-7, 1 - 1e-7].
double bce_loss(const AlphaMatte& pred, const BinaryMask& gt);
LossGrad bce_loss_grad(const AlphaMatte& pred, const BinaryMask& gt);

/// 1 - (sum pg + s) / (sum p + sum g - sum pg + s) with s = 1.
double iou_loss(const AlphaMatte& pred, const BinaryMask& gt);
LossGrad iou_loss_grad(const AlphaMatte& pred, const BinaryMask& gt);

enum class HeadTask { matting, dis };
HeadTask parse_head_task(std::string_view name);

/// Matting: L1 + Laplacian pyramid. DIS: BCE + IoU against gt binarized at 0.5.
LossGrad head_loss_grad(HeadTask task, const AlphaMatte& pred, const AlphaMatte& gt);

struct LossWeights {
    double kd = 1.0;
    double adv = 1.0;
    double ot = 1.0;
    double head = 1.0;
};

/// w_kd L_kd + w_adv L_adv + w_ot L_OT + w_head L_head; throws naming the
/// first non-finite component.
double total_loss(double kd, double adv, double ot, double head, const LossWeights& weights = {});

}  // namespace fclm
