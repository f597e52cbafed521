#include "fclm/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fclm::oracles {

double lp_optimum_uniform(const DenseMatrix& cost) {
    const std::size_t k = cost.rows();
    if (k == 0 || cost.cols() != k || k > 8) {
        throw std::invalid_argument("lp_optimum_uniform: need a square cost with 1 <= K <= 8");
    }
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) total += cost(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(k);
}

AlphaMatte gradient_magnitude_naive(const AlphaMatte& image, double sigma) {
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    const int side = 2 * half + 1;
    std::vector<double> kx(side * side), ky(side * side);
    double nx = 0.0, ny = 0.0;
    for (int v = -half; v <= half; ++v) {
        for (int u = -half; u <= half; ++u) {
            const double e = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
            const std::size_t idx = static_cast<std::size_t>((v + half) * side + (u + half));
            kx[idx] = u * e;
            ky[idx] = v * e;
            nx += kx[idx] * kx[idx];
            ny += ky[idx] * ky[idx];
        }
    }
    for (auto& w : kx) w /= std::sqrt(nx);
    for (auto& w : ky) w /= std::sqrt(ny);

    const long w = static_cast<long>(image.width());
    const long h = static_cast<long>(image.height());
    AlphaMatte out(image.width(), image.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double gx = 0.0, gy = 0.0;
            for (int v = -half; v <= half; ++v) {
                for (int u = -half; u <= half; ++u) {
                    const long sx = std::clamp(x - u, 0L, w - 1);
                    const long sy = std::clamp(y - v, 0L, h - 1);
                    const double p = image(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
                    const std::size_t idx = static_cast<std::size_t>((v + half) * side + (u + half));
                    gx += kx[idx] * p;
                    gy += ky[idx] * p;
                }
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = std::hypot(gx, gy);
        }
    }
    return out;
}

double grad_error_naive(const AlphaMatte& pred, const AlphaMatte& gt, double sigma) {
    const auto a = gradient_magnitude_naive(pred, sigma);
    const auto b = gradient_magnitude_naive(gt, sigma);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

namespace {

void flood(const std::vector<std::uint8_t>& on, std::vector<int>& label, long w, long h, long x,
           long y, int id, std::size_t& size) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = static_cast<std::size_t>(y * w + x);
    if (!on[i] || label[i] != 0) return;
    label[i] = id;
    ++size;
    flood(on, label, w, h, x + 1, y, id, size);
    flood(on, label, w, h, x - 1, y, id, size);
    flood(on, label, w, h, x, y + 1, id, size);
    flood(on, label, w, h, x, y - 1, id, size);
}

}  // namespace

double connectivity_error_flood(const AlphaMatte& pred, const AlphaMatte& gt, double step) {
    const long w = static_cast<long>(pred.width());
    const long h = static_cast<long>(pred.height());
    const std::size_t n = pred.size();
    const auto levels = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));

    std::vector<double> l(n, 1.0);
    std::vector<bool> settled(n, false);
    for (std::size_t i = 1; i <= levels; ++i) {
        const double t = static_cast<double>(i) * step;
        std::vector<std::uint8_t> on(n);
        for (std::size_t p = 0; p < n; ++p) on[p] = pred[p] >= t && gt[p] >= t;
        std::vector<int> label(n, 0);
        int next = 0, best_id = 0;
        std::size_t best_size = 0;
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                const std::size_t p = static_cast<std::size_t>(y * w + x);
                if (!on[p] || label[p] != 0) continue;
                std::size_t size = 0;
                flood(on, label, w, h, x, y, ++next, size);
                if (size > best_size) {
                    best_size = size;
                    best_id = next;
                }
            }
        }
        for (std::size_t p = 0; p < n; ++p) {
            if (!settled[p] && (best_id == 0 || label[p] != best_id)) {
                l[p] = static_cast<double>(i - 1) * step;
                settled[p] = true;
            }
        }
    }
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double dp = pred[p] - l[p];
        const double dg = gt[p] - l[p];
        total += std::abs((dp >= 0.15 ? 1.0 - dp : 1.0) - (dg >= 0.15 ? 1.0 - dg : 1.0));
    }
    return total;
}

}  // namespace fclm::oracles
