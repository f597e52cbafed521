#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "fclm/image.hpp"

namespace fclm {

inline constexpr double kMaxFBetaSq = 0.3;
inline constexpr double kWeightedFBetaSq = 1.0;
inline constexpr double kStructureAlpha = 0.5;
inline constexpr std::size_t kHceGamma = 5;

class UndefinedRecallError : public std::invalid_argument {
public:
    UndefinedRecallError() : std::invalid_argument("undefined recall") {}
};

/// Max over thresholds t in {0..255}/255 of the F-measure of {pred >= t};
/// pred is quantized to the 8-bit grid first.
double max_f_measure(const AlphaMatte& pred, const BinaryMask& gt, double beta_sq = kMaxFBetaSq);

/// Margolin weighted F-measure (Gaussian dependency sigma 5 on a 7x7 window,
/// distance decay ln(0.5)/5 on false positives).
double weighted_f_measure(const AlphaMatte& pred, const BinaryMask& gt,
                          double beta_sq = kWeightedFBetaSq);

double mae(const AlphaMatte& pred, const BinaryMask& gt);

/// Structure measure alpha * S_object + (1 - alpha) * S_region.
double s_measure(const AlphaMatte& pred, const BinaryMask& gt, double alpha = kStructureAlpha);

enum class EMeasureMode { mean, max, adaptive };
EMeasureMode parse_e_measure_mode(std::string_view name);

/// Enhanced-alignment measure of {pred >= t} against gt. mean/max run over
/// the non-trivial thresholds t in {1..255}/255; adaptive uses
/// t = min(2 mean(pred), 1).
double e_measure(const AlphaMatte& pred, const BinaryMask& gt, EMeasureMode mode = EMeasureMode::mean);
/// E-measure of an already binarized prediction.
double e_measure_binary(const BinaryMask& pred, const BinaryMask& gt);

/// Approximate human correction effort. Error regions of the 0.5-binarized
/// prediction lying outside the band of Chebyshev radius gamma around the gt
/// boundary each cost the vertex count of their contour simplified by
/// Douglas-Peucker at tolerance gamma.
std::size_t hce(const AlphaMatte& pred, const BinaryMask& gt, std::size_t gamma = kHceGamma);

/// Douglas-Peucker vertex count of a closed contour (pixel centres in order).
std::size_t closed_polygon_vertices(const std::vector<std::pair<long, long>>& contour,
                                    double tolerance);

/// Outer contour of the 8-connected region containing `start`, which must be
/// its first pixel in row-major order. Traced clockwise.
std::vector<std::pair<long, long>> trace_contour(const std::vector<std::uint8_t>& region,
                                                 std::size_t width, std::size_t height,
                                                 std::size_t start);

struct DisOptions {
    double max_f_beta_sq = kMaxFBetaSq;
    double weighted_f_beta_sq = kWeightedFBetaSq;
    double s_alpha = kStructureAlpha;
    EMeasureMode e_mode = EMeasureMode::mean;
    std::size_t hce_gamma = kHceGamma;
};

struct DisReport {
    double max_f = 0.0;
    double weighted_f = 0.0;
    double mae = 0.0;
    double s_measure = 0.0;
    double e_measure = 0.0;
    std::size_t hce = 0;
    bool hce_approx = true;
};

/// All six metrics; throws UndefinedRecallError for an all-zero gt.
DisReport dis_report(const AlphaMatte& pred, const BinaryMask& gt, const DisOptions& options = {});

}  // namespace fclm
