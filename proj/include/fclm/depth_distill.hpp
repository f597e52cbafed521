#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "fclm/feature_grid.hpp"
#include "fclm/image.hpp"
#include "fclm/tiny_net.hpp"

namespace fclm {

inline constexpr double kDefaultDepthThreshold = 0.25;

/// Foreground / background distillation weights on a patch grid.
struct DepthWeightPair {
    DenseMatrix d_plus;   // grid rows x cols
    DenseMatrix d_minus;  // grid rows x cols
    double delta = kDefaultDepthThreshold;

    PatchGrid grid() const { return {d_plus.rows(), d_plus.cols()}; }
};

class EmptyForegroundError : public std::runtime_error {
public:
    EmptyForegroundError() : std::runtime_error("empty foreground partition") {}
};

/// Divides by the maximum value (no-op for an all-zero map).
DepthMap normalize_depth(DepthMap depth);

/// Per-pixel weights:
///   d+ = depth / max(depth)  where depth > delta, else 0
///   d- = (delta - depth) / delta  where depth <= delta, else 0
/// then averaged over each patch of the grid. With strict set, a map
/// with no pixel above delta throws EmptyForegroundError.
DepthWeightPair compute_depth_weights(const DepthMap& depth, double delta, PatchGrid grid,
                                      bool strict = false);

/// Teacher-to-student projection tau(t + context) with tau =
/// Linear-ReLU-Linear. Parameters flatten as context, then body.
struct MetaNet {
    std::vector<double> context;
    TinyNet body;

    static MetaNet create(std::size_t teacher_dim, std::size_t hidden, std::size_t student_dim,
                          Rng& rng);
    /// Identity layers, zero biases and context; needs teacher_dim == student_dim.
    static MetaNet identity(std::size_t dim);

    std::size_t input_dim() const { return context.size(); }
    std::size_t output_dim() const { return body.output_dim(); }
    std::size_t parameter_count() const { return context.size() + body.parameter_count(); }
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> params);
    void descend(std::span<const double> grad, double rate);
};

FeatureGrid meta_project(const FeatureGrid& teacher, const MetaNet& net);

/// Mean over tokens of KL(softmax(student/T) || softmax(teacher/T)).
double kd_distance(const FeatureGrid& student, const FeatureGrid& teacher, double temperature);

struct KdDistanceGrad {
    double value = 0.0;
    DenseMatrix d_student;
    DenseMatrix d_teacher;
};
/// kd_distance with per-token weights w: sum_i w_i KL_i / sum_i w_i (0 when
/// the weights sum to 0). Empty weights mean uniform.
KdDistanceGrad weighted_kd_distance(const FeatureGrid& student, const FeatureGrid& teacher,
                                    std::span<const double> weights, double temperature);

double kd_loss_plain(const FeatureGrid& student_a, const FeatureGrid& student_b,
                     const FeatureGrid& teacher_a_proj, const FeatureGrid& teacher_b_proj,
                     double temperature = 1.0);

double kd_loss_depth_aware(const FeatureGrid& student, const FeatureGrid& teacher,
                           const DepthWeightPair& weights, const MetaNet& fg_net,
                           const MetaNet& bg_net, double temperature = 1.0);

struct KdGrad {
    double loss = 0.0;
    DenseMatrix d_student;
    std::vector<double> d_fg_net;
    std::vector<double> d_bg_net;
};
/// Depth-aware loss for one image with gradients for the student tokens and
/// both meta-nets. The teacher receives no gradient.
KdGrad kd_loss_depth_aware_grad(const FeatureGrid& student, const FeatureGrid& teacher,
                                const DepthWeightPair& weights, const MetaNet& fg_net,
                                const MetaNet& bg_net, double temperature = 1.0);

}  // namespace fclm
