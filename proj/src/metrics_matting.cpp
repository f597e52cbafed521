#include "fclm/metrics_matting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "components.hpp"

namespace fclm {

SadResult sad(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_shape(pred, gt, "sad");
    SadResult r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        r.raw += std::abs(pred[i] - gt[i]);
    }
    r.scaled = r.raw / kMattingScale;
    return r;
}

MseMad mse_mad(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_shape(pred, gt, "mse_mad");
    if (pred.empty()) {
        throw std::invalid_argument("mse_mad: empty image");
    }
    MseMad r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        r.mse += d * d;
        r.mad += std::abs(d);
    }
    r.mse /= static_cast<double>(pred.size());
    r.mad /= static_cast<double>(pred.size());
    return r;
}

GaussianDerivativeKernel gaussian_derivative_kernel(double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("gaussian_derivative_kernel: sigma must be positive");
    }
    GaussianDerivativeKernel k;
    k.half = static_cast<int>(std::ceil(3.0 * sigma));
    double ns = 0.0;
    double nd = 0.0;
    for (int u = -k.half; u <= k.half; ++u) {
        const double g = std::exp(-u * u / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
        k.smooth.push_back(g);
        k.derivative.push_back(-u * g / (sigma * sigma));
        ns += g * g;
        nd += (u * g / (sigma * sigma)) * (u * g / (sigma * sigma));
    }
    for (double& v : k.smooth) v /= std::sqrt(ns);
    for (double& v : k.derivative) v /= std::sqrt(nd);
    return k;
}

namespace {

std::size_t clamp_index(long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(n) - 1));
}

// 1-D convolution along x (horizontal) or y with replicate borders.
AlphaMatte convolve_axis(const AlphaMatte& in, const std::vector<double>& taps, int half,
                         bool horizontal) {
    AlphaMatte out(in.width(), in.height());
    for (std::size_t y = 0; y < in.height(); ++y) {
        for (std::size_t x = 0; x < in.width(); ++x) {
            double s = 0.0;
            for (int u = -half; u <= half; ++u) {
                const double t = taps[static_cast<std::size_t>(u + half)];
                s += horizontal ? t * in(clamp_index(static_cast<long>(x) - u, in.width()), y)
                                : t * in(x, clamp_index(static_cast<long>(y) - u, in.height()));
            }
            out(x, y) = s;
        }
    }
    return out;
}

}  // namespace

AlphaMatte gradient_magnitude(const AlphaMatte& image, double sigma) {
    const auto k = gaussian_derivative_kernel(sigma);
    const AlphaMatte gx = convolve_axis(convolve_axis(image, k.derivative, k.half, true),
                                        k.smooth, k.half, false);
    const AlphaMatte gy = convolve_axis(convolve_axis(image, k.smooth, k.half, true),
                                        k.derivative, k.half, false);
    AlphaMatte mag(image.width(), image.height());
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
    }
    return mag;
}

GradResult grad_error(const AlphaMatte& pred, const AlphaMatte& gt, double sigma) {
    require_same_shape(pred, gt, "grad_error");
    if (pred.width() < 3 || pred.height() < 3) {
        throw std::invalid_argument("grad_error: image must be at least 3x3");
    }
    const auto mp = gradient_magnitude(pred, sigma);
    const auto mg = gradient_magnitude(gt, sigma);
    GradResult r;
    for (std::size_t i = 0; i < mp.size(); ++i) {
        const double d = mp[i] - mg[i];
        r.raw += d * d;
    }
    r.scaled = r.raw / kMattingScale;
    return r;
}

ConnResult connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt, double step) {
    require_same_shape(pred, gt, "connectivity_error");
    if (!(step > 0.0 && step < 1.0)) {
        throw std::invalid_argument("connectivity_error: step must lie in (0, 1)");
    }
    const std::size_t n = pred.size();
    const auto steps = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
    // -1 marks pixels still connected at every threshold so far
    std::vector<double> level(n, -1.0);
    std::vector<std::uint8_t> both(n);
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * step;
        for (std::size_t p = 0; p < n; ++p) {
            both[p] = (pred[p] >= t && gt[p] >= t) ? 1 : 0;
        }
        const auto cc = detail::label_components(both, pred.width(), pred.height(), 4);
        std::uint32_t largest = 0;
        std::size_t best = 0;
        for (std::size_t k = 0; k < cc.count(); ++k) {
            if (cc.sizes[k] > best) {
                best = cc.sizes[k];
                largest = static_cast<std::uint32_t>(k + 1);
            }
        }
        const double previous = static_cast<double>(i - 1) * step;
        for (std::size_t p = 0; p < n; ++p) {
            const bool in_largest = largest != 0 && cc.labels[p] == largest;
            if (level[p] == -1.0 && !in_largest) {
                level[p] = previous;
            }
        }
    }
    ConnResult r;
    for (std::size_t p = 0; p < n; ++p) {
        const double l = level[p] == -1.0 ? 1.0 : level[p];
        const double dp = pred[p] - l;
        const double dg = gt[p] - l;
        const double phi_p = 1.0 - (dp >= 0.15 ? dp : 0.0);
        const double phi_g = 1.0 - (dg >= 0.15 ? dg : 0.0);
        r.raw += std::abs(phi_p - phi_g);
    }
    r.scaled = r.raw / kMattingScale;
    return r;
}

MatteReport matte_report(const AlphaMatte& pred, const AlphaMatte& gt, double sigma,
                         double conn_step) {
    MatteReport r;
    const auto s = sad(pred, gt);
    const auto m = mse_mad(pred, gt);
    const auto g = grad_error(pred, gt, sigma);
    const auto c = connectivity_error(pred, gt, conn_step);
    r.sad = s.scaled;
    r.sad_raw = s.raw;
    r.mse = m.mse;
    r.mad = m.mad;
    r.grad = g.scaled;
    r.grad_raw = g.raw;
    r.conn = c.scaled;
    r.conn_raw = c.raw;
    r.pixel_count = pred.size();
    return r;
}

ImqQuality parse_imq_quality(std::string_view name) {
    if (name == "mse") return ImqQuality::mse;
    if (name == "mad") return ImqQuality::mad;
    if (name == "grad") return ImqQuality::grad;
    if (name == "conn") return ImqQuality::conn;
    throw std::invalid_argument("unknown IMQ quality '" + std::string(name) + "'");
}

namespace {

double binary_iou(const AlphaMatte& a, const AlphaMatte& b) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool pa = a[i] >= 0.5;
        const bool pb = b[i] >= 0.5;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    // two empty instances agree perfectly
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double quality_error(const AlphaMatte& pred, const AlphaMatte& gt, ImqQuality quality) {
    switch (quality) {
        case ImqQuality::mse:
            return mse_mad(pred, gt).mse;
        case ImqQuality::mad:
            return mse_mad(pred, gt).mad;
        case ImqQuality::grad:
            return grad_error(pred, gt).scaled;
        case ImqQuality::conn:
            return connectivity_error(pred, gt).scaled;
    }
    return 0.0;
}

}  // namespace

ImqResult imq_detail(const std::vector<AlphaMatte>& pred_instances,
                     const std::vector<AlphaMatte>& gt_instances, ImqQuality quality) {
    if (gt_instances.empty()) {
        throw std::invalid_argument("imq: empty ground-truth instance set");
    }
    for (const auto& p : pred_instances) {
        require_same_shape(p, gt_instances.front(), "imq");
    }
    for (const auto& g : gt_instances) {
        require_same_shape(g, gt_instances.front(), "imq");
    }
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t gi = 0; gi < gt_instances.size(); ++gi) {
        for (std::size_t pi = 0; pi < pred_instances.size(); ++pi) {
            const double iou = binary_iou(pred_instances[pi], gt_instances[gi]);
            if (iou > 0.0) {
                candidates.emplace_back(iou, gi, pi);
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<bool> gt_used(gt_instances.size(), false);
    std::vector<bool> pred_used(pred_instances.size(), false);
    ImqResult r;
    double total = 0.0;
    for (const auto& [iou, gi, pi] : candidates) {
        if (gt_used[gi] || pred_used[pi]) {
            continue;
        }
        gt_used[gi] = true;
        pred_used[pi] = true;
        const double score = 1.0 / (1.0 + quality_error(pred_instances[pi], gt_instances[gi], quality));
        r.matches.push_back({pi, gi, iou, score});
        total += score;
    }
    r.unmatched_pred = static_cast<std::size_t>(std::count(pred_used.begin(), pred_used.end(), false));
    r.unmatched_gt = static_cast<std::size_t>(std::count(gt_used.begin(), gt_used.end(), false));
    r.imq = 100.0 * total / static_cast<double>(gt_instances.size() + r.unmatched_pred);
    return r;
}

double imq(const std::vector<AlphaMatte>& pred_instances, const std::vector<AlphaMatte>& gt_instances,
           ImqQuality quality) {
    return imq_detail(pred_instances, gt_instances, quality).imq;
}

}  // namespace fclm
