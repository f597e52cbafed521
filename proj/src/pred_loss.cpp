#include "fclm/pred_loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fclm {
namespace {

double sign(double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

// Working buffer for the pyramid; the tag-free layout keeps the linear
// operators and their adjoints side by side.
struct Buffer {
    std::size_t w = 0;
    std::size_t h = 0;
    std::vector<double> v;

    Buffer() = default;
    Buffer(std::size_t width, std::size_t height) : w(width), h(height), v(width * height, 0.0) {}
    double& at(std::size_t x, std::size_t y) { return v[y * w + x]; }
    double at(std::size_t x, std::size_t y) const { return v[y * w + x]; }
};

constexpr std::array<double, 5> kBinomial{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// reflect-101 index (edge pixel not repeated)
std::size_t reflect(long i, std::size_t n) {
    if (n == 1) {
        return 0;
    }
    const long period = 2 * (static_cast<long>(n) - 1);
    i %= period;
    if (i < 0) {
        i += period;
    }
    if (i >= static_cast<long>(n)) {
        i = period - i;
    }
    return static_cast<std::size_t>(i);
}

Buffer blur(const Buffer& in) {
    Buffer tmp(in.w, in.h);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) {
                s += kBinomial[k] * in.at(reflect(static_cast<long>(x) + k - 2, in.w), y);
            }
            tmp.at(x, y) = s;
        }
    }
    Buffer out(in.w, in.h);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) {
                s += kBinomial[k] * tmp.at(x, reflect(static_cast<long>(y) + k - 2, in.h));
            }
            out.at(x, y) = s;
        }
    }
    return out;
}

Buffer blur_adjoint(const Buffer& in) {
    Buffer tmp(in.w, in.h);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            for (int k = 0; k < 5; ++k) {
                tmp.at(x, reflect(static_cast<long>(y) + k - 2, in.h)) += kBinomial[k] * in.at(x, y);
            }
        }
    }
    Buffer out(in.w, in.h);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            for (int k = 0; k < 5; ++k) {
                out.at(reflect(static_cast<long>(x) + k - 2, in.w), y) += kBinomial[k] * tmp.at(x, y);
            }
        }
    }
    return out;
}

Buffer decimate(const Buffer& in) {
    Buffer out((in.w + 1) / 2, (in.h + 1) / 2);
    for (std::size_t y = 0; y < out.h; ++y) {
        for (std::size_t x = 0; x < out.w; ++x) {
            out.at(x, y) = in.at(2 * x, 2 * y);
        }
    }
    return out;
}

// zero insertion into a w x h canvas; also the adjoint of decimate
Buffer zero_insert(const Buffer& in, std::size_t w, std::size_t h) {
    Buffer out(w, h);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            out.at(2 * x, 2 * y) = in.at(x, y);
        }
    }
    return out;
}

Buffer scaled(Buffer b, double s) {
    for (double& v : b.v) {
        v *= s;
    }
    return b;
}

Buffer expand(const Buffer& in, std::size_t w, std::size_t h) {
    return scaled(blur(zero_insert(in, w, h)), 4.0);
}

Buffer expand_adjoint(const Buffer& in) {
    return decimate(scaled(blur_adjoint(in), 4.0));
}

void check_levels(std::size_t w, std::size_t h, std::size_t levels) {
    if (levels == 0) {
        throw std::invalid_argument("laplacian pyramid: need at least one level");
    }
    const std::size_t need = std::size_t{1} << (levels - 1);
    if (w < need || h < need) {
        throw std::invalid_argument("laplacian pyramid: " + std::to_string(w) + "x" +
                                    std::to_string(h) + " image too small for " +
                                    std::to_string(levels) + " levels (needs " +
                                    std::to_string(need) + " px per side)");
    }
}

std::vector<Buffer> pyramid_bands(const Buffer& image, std::size_t levels) {
    check_levels(image.w, image.h, levels);
    std::vector<Buffer> gauss{image};
    for (std::size_t i = 1; i < levels; ++i) {
        gauss.push_back(decimate(blur(gauss.back())));
    }
    std::vector<Buffer> bands(levels);
    for (std::size_t i = 0; i + 1 < levels; ++i) {
        const Buffer up = expand(gauss[i + 1], gauss[i].w, gauss[i].h);
        bands[i] = gauss[i];
        for (std::size_t k = 0; k < up.v.size(); ++k) {
            bands[i].v[k] -= up.v[k];
        }
    }
    bands[levels - 1] = gauss[levels - 1];
    return bands;
}

Buffer difference(const AlphaMatte& pred, const AlphaMatte& gt) {
    Buffer d(pred.width(), pred.height());
    for (std::size_t i = 0; i < d.v.size(); ++i) {
        d.v[i] = pred[i] - gt[i];
    }
    return d;
}

template <class Tag>
void require_nonempty(const Plane<Tag>& p, const char* what) {
    if (p.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty image");
    }
}

}  // namespace

double l1_matte_loss(const AlphaMatte& pred, const AlphaMatte& gt) {
    return l1_matte_loss_grad(pred, gt).value;
}

LossGrad l1_matte_loss_grad(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_shape(pred, gt, "l1_matte_loss");
    require_nonempty(pred, "l1_matte_loss");
    const double n = static_cast<double>(pred.size());
    LossGrad out{0.0, std::vector<double>(pred.size())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        out.value += std::abs(d);
        out.grad[i] = sign(d) / n;
    }
    out.value /= n;
    return out;
}

std::vector<AlphaMatte> laplacian_pyramid(const AlphaMatte& image, std::size_t levels) {
    Buffer b(image.width(), image.height());
    std::copy(image.values().begin(), image.values().end(), b.v.begin());
    std::vector<AlphaMatte> out;
    for (auto& band : pyramid_bands(b, levels)) {
        out.emplace_back(band.w, band.h, std::move(band.v));
    }
    return out;
}

double laplacian_pyramid_loss(const AlphaMatte& pred, const AlphaMatte& gt, std::size_t levels) {
    require_same_shape(pred, gt, "laplacian_pyramid_loss");
    const auto bands = pyramid_bands(difference(pred, gt), levels);
    double loss = 0.0;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        double s = 0.0;
        for (double v : bands[i].v) {
            s += std::abs(v);
        }
        loss += std::ldexp(1.0, static_cast<int>(i)) * s / static_cast<double>(bands[i].v.size());
    }
    return loss;
}

LossGrad laplacian_pyramid_loss_grad(const AlphaMatte& pred, const AlphaMatte& gt,
                                     std::size_t levels) {
    require_same_shape(pred, gt, "laplacian_pyramid_loss");
    const auto bands = pyramid_bands(difference(pred, gt), levels);
    LossGrad out;
    // seeds: d loss / d band_i
    std::vector<Buffer> seed(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        const double w = std::ldexp(1.0, static_cast<int>(i)) / static_cast<double>(bands[i].v.size());
        seed[i] = Buffer(bands[i].w, bands[i].h);
        double s = 0.0;
        for (std::size_t k = 0; k < bands[i].v.size(); ++k) {
            s += std::abs(bands[i].v[k]);
            seed[i].v[k] = w * sign(bands[i].v[k]);
        }
        out.value += w * s;
    }
    // band_i = G_i - expand(G_{i+1}); G_{i+1} = decimate(blur(G_i))
    Buffer d_gauss = seed[levels - 1];
    for (std::size_t i = levels - 1; i-- > 0;) {
        const Buffer from_band = expand_adjoint(seed[i]);
        for (std::size_t k = 0; k < d_gauss.v.size(); ++k) {
            d_gauss.v[k] -= from_band.v[k];
        }
        Buffer back = blur_adjoint(zero_insert(d_gauss, seed[i].w, seed[i].h));
        for (std::size_t k = 0; k < back.v.size(); ++k) {
            back.v[k] += seed[i].v[k];
        }
        d_gauss = std::move(back);
    }
    out.grad = std::move(d_gauss.v);
    return out;
}

double bce_loss(const AlphaMatte& pred, const BinaryMask& gt) {
    return bce_loss_grad(pred, gt).value;
}

LossGrad bce_loss_grad(const AlphaMatte& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt, "bce_loss");
    require_nonempty(pred, "bce_loss");
    const double n = static_cast<double>(pred.size());
    LossGrad out{0.0, std::vector<double>(pred.size(), 0.0)};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
        const double g = gt[i];
        out.value -= g * std::log(p) + (1.0 - g) * std::log(1.0 - p);
        if (pred[i] > kBceClamp && pred[i] < 1.0 - kBceClamp) {
            out.grad[i] = (-g / p + (1.0 - g) / (1.0 - p)) / n;
        }
    }
    out.value /= n;
    return out;
}

double iou_loss(const AlphaMatte& pred, const BinaryMask& gt) {
    return iou_loss_grad(pred, gt).value;
}

LossGrad iou_loss_grad(const AlphaMatte& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt, "iou_loss");
    double inter = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] * gt[i];
        total += pred[i] + gt[i];
    }
    const double s = kIouSmoothing;
    const double uni = total - inter + s;
    const double num = inter + s;
    LossGrad out{1.0 - num / uni, std::vector<double>(pred.size())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double g = gt[i];
        // d inter = g, d union = 1 - g
        out.grad[i] = -(g * uni - num * (1.0 - g)) / (uni * uni);
    }
    return out;
}

HeadTask parse_head_task(std::string_view name) {
    if (name == "matting") {
        return HeadTask::matting;
    }
    if (name == "dis") {
        return HeadTask::dis;
    }
    throw std::invalid_argument("unknown task '" + std::string(name) + "' (expected matting or dis)");
}

LossGrad head_loss_grad(HeadTask task, const AlphaMatte& pred, const AlphaMatte& gt) {
    LossGrad a;
    LossGrad b;
    if (task == HeadTask::matting) {
        a = l1_matte_loss_grad(pred, gt);
        b = laplacian_pyramid_loss_grad(pred, gt);
    } else {
        const BinaryMask mask = binarize(gt);
        a = bce_loss_grad(pred, mask);
        b = iou_loss_grad(pred, mask);
    }
    for (std::size_t i = 0; i < a.grad.size(); ++i) {
        a.grad[i] += b.grad[i];
    }
    a.value += b.value;
    return a;
}

double total_loss(double kd, double adv, double ot, double head, const LossWeights& weights) {
    const std::array<std::pair<const char*, double>, 4> parts{
        {{"kd", kd}, {"adv", adv}, {"ot", ot}, {"head", head}}};
    for (const auto& [name, value] : parts) {
        if (!std::isfinite(value)) {
            throw std::invalid_argument(std::string("total_loss: non-finite ") + name + " component");
        }
    }
    return weights.kd * kd + weights.adv * adv + weights.ot * ot + weights.head * head;
}

}  // namespace fclm
