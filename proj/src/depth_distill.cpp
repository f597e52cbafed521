#include "fclm/depth_distill.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fclm {

DepthMap normalize_depth(DepthMap depth) {
    double peak = 0.0;
    for (double v : depth.values()) {
        peak = std::max(peak, v);
    }
    if (peak > 0.0) {
        for (double& v : depth.values()) {
            v /= peak;
        }
    }
    return depth;
}

DepthWeightPair compute_depth_weights(const DepthMap& depth, double delta, PatchGrid grid,
                                      bool strict) {
    if (depth.empty()) {
        throw std::invalid_argument("compute_depth_weights: empty depth map");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("compute_depth_weights: delta must lie in (0, 1)");
    }
    if (grid.rows == 0 || grid.cols == 0 || depth.height() % grid.rows != 0 ||
        depth.width() % grid.cols != 0) {
        throw std::invalid_argument("compute_depth_weights: " + std::to_string(depth.width()) + "x" +
                                    std::to_string(depth.height()) +
                                    " depth map does not divide into a " +
                                    std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                                    " patch grid");
    }
    double peak = 0.0;
    for (double v : depth.values()) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw std::invalid_argument("compute_depth_weights: depth values must lie in [0, 1]");
        }
        peak = std::max(peak, v);
    }
    if (strict && peak <= delta) {
        throw EmptyForegroundError();
    }

    const std::size_t ph = depth.height() / grid.rows;
    const std::size_t pw = depth.width() / grid.cols;
    const double inv_area = 1.0 / static_cast<double>(ph * pw);
    DepthWeightPair out{DenseMatrix(grid.rows, grid.cols), DenseMatrix(grid.rows, grid.cols), delta};
    for (std::size_t y = 0; y < depth.height(); ++y) {
        for (std::size_t x = 0; x < depth.width(); ++x) {
            const double d = depth(x, y);
            double plus = 0.0;
            double minus = 0.0;
            if (d > delta) {
                plus = d / peak;
            } else {
                minus = (delta - d) / delta;
            }
            out.d_plus(y / ph, x / pw) += plus * inv_area;
            out.d_minus(y / ph, x / pw) += minus * inv_area;
        }
    }
    return out;
}

MetaNet MetaNet::create(std::size_t teacher_dim, std::size_t hidden, std::size_t student_dim,
                        Rng& rng) {
    const std::array<std::size_t, 3> dims{teacher_dim, hidden, student_dim};
    const std::array<Activation, 2> acts{Activation::relu, Activation::none};
    MetaNet net{std::vector<double>(teacher_dim), TinyNet::random(dims, acts, rng, std::sqrt(2.0))};
    for (double& c : net.context) {
        c = 0.02 * rng.normal();
    }
    return net;
}

MetaNet MetaNet::identity(std::size_t dim) {
    const std::array<std::size_t, 3> dims{dim, dim, dim};
    const std::array<Activation, 2> acts{Activation::relu, Activation::none};
    MetaNet net{std::vector<double>(dim, 0.0), TinyNet::zeros(dims, acts)};
    for (auto& layer : net.body.layers()) {
        for (std::size_t i = 0; i < dim; ++i) {
            layer.weight(i, i) = 1.0;
        }
    }
    return net;
}

std::vector<double> MetaNet::parameters() const {
    std::vector<double> p(context);
    const auto body_params = body.parameters();
    p.insert(p.end(), body_params.begin(), body_params.end());
    return p;
}

void MetaNet::set_parameters(std::span<const double> params) {
    if (params.size() != parameter_count()) {
        throw std::invalid_argument("MetaNet::set_parameters: size mismatch");
    }
    std::copy_n(params.begin(), context.size(), context.begin());
    body.set_parameters(params.subspan(context.size()));
}

void MetaNet::descend(std::span<const double> grad, double rate) {
    if (grad.size() != parameter_count()) {
        throw std::invalid_argument("MetaNet::descend: size mismatch");
    }
    for (std::size_t i = 0; i < context.size(); ++i) {
        context[i] -= rate * grad[i];
    }
    body.descend(grad.subspan(context.size()), rate);
}

FeatureGrid meta_project(const FeatureGrid& teacher, const MetaNet& net) {
    if (teacher.dim() != net.input_dim() || net.body.input_dim() != net.input_dim()) {
        throw std::invalid_argument("meta_project: teacher dim " + std::to_string(teacher.dim()) +
                                    " != meta-net input dim " + std::to_string(net.input_dim()));
    }
    DenseMatrix out(teacher.token_count(), net.output_dim());
    std::vector<double> shifted(teacher.dim());
    for (std::size_t t = 0; t < teacher.token_count(); ++t) {
        const auto row = teacher.tokens.row(t);
        for (std::size_t k = 0; k < shifted.size(); ++k) {
            shifted[k] = row[k] + net.context[k];
        }
        const auto y = net.body.forward(shifted);
        std::copy(y.begin(), y.end(), out.row(t).begin());
    }
    return FeatureGrid(teacher.grid, std::move(out));
}

KdDistanceGrad weighted_kd_distance(const FeatureGrid& student, const FeatureGrid& teacher,
                                    std::span<const double> weights, double temperature) {
    require_same_shape(student, teacher, "kd distance");
    const std::size_t n = student.token_count();
    if (!weights.empty() && weights.size() != n) {
        throw std::invalid_argument("kd distance: weight grid does not match the feature grid");
    }
    KdDistanceGrad out{0.0, DenseMatrix(n, student.dim()), DenseMatrix(n, student.dim())};
    double total_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total_weight += weights.empty() ? 1.0 : weights[i];
    }
    if (total_weight <= 0.0) {
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (weights.empty() ? 1.0 : weights[i]) / total_weight;
        if (w == 0.0) {
            continue;
        }
        const auto kl = softmax_kl(student.tokens.row(i), teacher.tokens.row(i), temperature);
        out.value += w * kl.value;
        auto ds = out.d_student.row(i);
        auto dt = out.d_teacher.row(i);
        for (std::size_t k = 0; k < ds.size(); ++k) {
            ds[k] = w * kl.d_student[k];
            dt[k] = w * kl.d_teacher[k];
        }
    }
    return out;
}

double kd_distance(const FeatureGrid& student, const FeatureGrid& teacher, double temperature) {
    return weighted_kd_distance(student, teacher, {}, temperature).value;
}

double kd_loss_plain(const FeatureGrid& student_a, const FeatureGrid& student_b,
                     const FeatureGrid& teacher_a_proj, const FeatureGrid& teacher_b_proj,
                     double temperature) {
    return kd_distance(student_a, teacher_a_proj, temperature) +
           kd_distance(student_b, teacher_b_proj, temperature);
}

namespace {

// One weighted term of the depth-aware loss; accumulates into the student
// gradient and the meta-net gradient.
double depth_term(const FeatureGrid& student, const FeatureGrid& teacher,
                  std::span<const double> weights, const MetaNet& net, double temperature,
                  DenseMatrix& d_student, std::vector<double>& d_net) {
    const FeatureGrid projected = meta_project(teacher, net);
    const auto term = weighted_kd_distance(student, projected, weights, temperature);
    for (std::size_t k = 0; k < d_student.size(); ++k) {
        d_student.data()[k] += term.d_student.data()[k];
    }
    d_net.assign(net.parameter_count(), 0.0);
    const std::size_t ctx = net.context.size();
    std::span<double> d_body(d_net.data() + ctx, d_net.size() - ctx);
    std::vector<double> shifted(teacher.dim());
    NetTrace trace;
    for (std::size_t t = 0; t < teacher.token_count(); ++t) {
        if (weights[t] == 0.0) {
            continue;
        }
        const auto row = teacher.tokens.row(t);
        for (std::size_t k = 0; k < shifted.size(); ++k) {
            shifted[k] = row[k] + net.context[k];
        }
        net.body.forward(shifted, trace);
        const auto d_in = net.body.backward(trace, term.d_teacher.row(t), d_body);
        for (std::size_t k = 0; k < ctx; ++k) {
            d_net[k] += d_in[k];
        }
    }
    return term.value;
}

void check_weight_grid(const FeatureGrid& student, const DepthWeightPair& weights) {
    if (weights.grid() != student.grid || weights.d_minus.rows() != weights.d_plus.rows() ||
        weights.d_minus.cols() != weights.d_plus.cols()) {
        throw std::invalid_argument("kd_loss_depth_aware: weight grid does not match the feature grid");
    }
}

}  // namespace

KdGrad kd_loss_depth_aware_grad(const FeatureGrid& student, const FeatureGrid& teacher,
                                const DepthWeightPair& weights, const MetaNet& fg_net,
                                const MetaNet& bg_net, double temperature) {
    check_weight_grid(student, weights);
    if (teacher.grid != student.grid) {
        throw std::invalid_argument("kd_loss_depth_aware: teacher grid does not match the student grid");
    }
    KdGrad out;
    out.d_student = DenseMatrix(student.token_count(), student.dim());
    out.loss = depth_term(student, teacher, weights.d_plus.data(), fg_net, temperature,
                          out.d_student, out.d_fg_net);
    out.loss += depth_term(student, teacher, weights.d_minus.data(), bg_net, temperature,
                           out.d_student, out.d_bg_net);
    return out;
}

double kd_loss_depth_aware(const FeatureGrid& student, const FeatureGrid& teacher,
                           const DepthWeightPair& weights, const MetaNet& fg_net,
                           const MetaNet& bg_net, double temperature) {
    check_weight_grid(student, weights);
    const auto fg = meta_project(teacher, fg_net);
    const auto bg = meta_project(teacher, bg_net);
    return weighted_kd_distance(student, fg, weights.d_plus.data(), temperature).value +
           weighted_kd_distance(student, bg, weights.d_minus.data(), temperature).value;
}

}  // namespace fclm
