#include "fclm/metrics_dis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "components.hpp"

namespace fclm {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kLevels = 256;

void check_pair(const AlphaMatte& pred, const BinaryMask& gt, const char* what) {
    require_same_shape(pred, gt, what);
    if (pred.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty image");
    }
}

std::vector<int> quantize(const AlphaMatte& pred) {
    std::vector<int> q(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        q[i] = static_cast<int>(std::lround(std::clamp(pred[i], 0.0, 1.0) * 255.0));
    }
    return q;
}

double f_score(double precision, double recall, double beta_sq) {
    const double denom = beta_sq * precision + recall;
    return denom > 0.0 ? (1.0 + beta_sq) * precision * recall / denom : 0.0;
}

// Squared Euclidean distance to the nearest nonzero pixel plus that pixel's
// index (exact, separable lower-envelope transform).
struct DistanceField {
    std::vector<double> sq_dist;
    std::vector<std::size_t> nearest;
};

DistanceField distance_to_foreground(const BinaryMask& mask) {
    const std::size_t w = mask.width();
    const std::size_t h = mask.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    // column pass: vertical distance to the nearest foreground row
    std::vector<double> col_sq(w * h, inf);
    std::vector<std::size_t> col_row(w * h, 0);
    for (std::size_t x = 0; x < w; ++x) {
        long last = -1;
        for (std::size_t y = 0; y < h; ++y) {
            if (mask(x, y) > 0.5) last = static_cast<long>(y);
            if (last >= 0) {
                const double d = static_cast<double>(y) - static_cast<double>(last);
                col_sq[y * w + x] = d * d;
                col_row[y * w + x] = static_cast<std::size_t>(last);
            }
        }
        last = -1;
        for (std::size_t y = h; y-- > 0;) {
            if (mask(x, y) > 0.5) last = static_cast<long>(y);
            if (last >= 0) {
                const double d = static_cast<double>(last) - static_cast<double>(y);
                if (d * d < col_sq[y * w + x]) {
                    col_sq[y * w + x] = d * d;
                    col_row[y * w + x] = static_cast<std::size_t>(last);
                }
            }
        }
    }
    DistanceField out{std::vector<double>(w * h, inf), std::vector<std::size_t>(w * h, 0)};
    std::vector<std::size_t> sites(w);
    std::vector<double> bounds(w + 1);
    for (std::size_t y = 0; y < h; ++y) {
        const double* f = col_sq.data() + y * w;
        std::size_t k = 0;
        bool any = false;
        for (std::size_t q = 0; q < w; ++q) {
            if (!std::isfinite(f[q])) continue;
            const double fq = f[q] + static_cast<double>(q * q);
            if (!any) {
                sites[0] = q;
                bounds[0] = -inf;
                bounds[1] = inf;
                k = 0;
                any = true;
                continue;
            }
            double s = 0.0;
            while (true) {
                const std::size_t v = sites[k];
                s = (fq - (f[v] + static_cast<double>(v * v))) /
                    (2.0 * (static_cast<double>(q) - static_cast<double>(v)));
                if (s <= bounds[k] && k > 0) {
                    --k;
                } else {
                    break;
                }
            }
            ++k;
            sites[k] = q;
            bounds[k] = s;
            bounds[k + 1] = inf;
        }
        if (!any) continue;
        k = 0;
        for (std::size_t x = 0; x < w; ++x) {
            while (bounds[k + 1] < static_cast<double>(x)) ++k;
            const std::size_t v = sites[k];
            const double dx = static_cast<double>(x) - static_cast<double>(v);
            out.sq_dist[y * w + x] = dx * dx + f[v];
            out.nearest[y * w + x] = col_row[y * w + v] * w + v;
        }
    }
    return out;
}

}  // namespace

double max_f_measure(const AlphaMatte& pred, const BinaryMask& gt, double beta_sq) {
    check_pair(pred, gt, "max_f_measure");
    std::array<std::size_t, kLevels> fg_hist{};
    std::array<std::size_t, kLevels> bg_hist{};
    const auto levels = quantize(pred);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (gt[i] > 0.5) {
            ++fg_hist[static_cast<std::size_t>(levels[i])];
            ++positives;
        } else {
            ++bg_hist[static_cast<std::size_t>(levels[i])];
        }
    }
    if (positives == 0) {
        throw UndefinedRecallError();
    }
    double best = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t t = kLevels; t-- > 0;) {
        tp += fg_hist[t];
        fp += bg_hist[t];
        const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        best = std::max(best, f_score(precision, recall, beta_sq));
    }
    return best;
}

double weighted_f_measure(const AlphaMatte& pred, const BinaryMask& gt, double beta_sq) {
    check_pair(pred, gt, "weighted_f_measure");
    const std::size_t w = gt.width();
    const std::size_t h = gt.height();
    std::size_t positives = 0;
    for (double v : gt.values()) positives += v > 0.5 ? 1 : 0;
    if (positives == 0) {
        throw UndefinedRecallError();
    }
    const auto field = distance_to_foreground(gt);
    std::vector<double> err(w * h);
    for (std::size_t i = 0; i < err.size(); ++i) {
        err[i] = std::abs(pred[i] - gt[i]);
    }
    // outside the object, take the error of the nearest object pixel
    std::vector<double> err_t(err);
    for (std::size_t i = 0; i < err.size(); ++i) {
        if (gt[i] <= 0.5) err_t[i] = err[field.nearest[i]];
    }
    // 7x7 Gaussian, sigma 5, normalized; replicate borders
    constexpr int half = 3;
    constexpr double sigma = 5.0;
    std::array<double, 2 * half + 1> taps{};
    double tap_sum = 0.0;
    for (int u = -half; u <= half; ++u) {
        taps[static_cast<std::size_t>(u + half)] = std::exp(-u * u / (2.0 * sigma * sigma));
        tap_sum += taps[static_cast<std::size_t>(u + half)];
    }
    for (double& t : taps) t /= tap_sum;
    std::vector<double> tmp(w * h, 0.0);
    std::vector<double> err_a(w * h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int u = -half; u <= half; ++u) {
                const long xx = std::clamp(static_cast<long>(x) + u, 0L, static_cast<long>(w) - 1);
                s += taps[static_cast<std::size_t>(u + half)] * err_t[y * w + static_cast<std::size_t>(xx)];
            }
            tmp[y * w + x] = s;
        }
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int u = -half; u <= half; ++u) {
                const long yy = std::clamp(static_cast<long>(y) + u, 0L, static_cast<long>(h) - 1);
                s += taps[static_cast<std::size_t>(u + half)] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            err_a[y * w + x] = s;
        }
    }
    const double decay = std::log(0.5) / 5.0;
    double ew_in = 0.0;
    double ew_out = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        if (gt[i] > 0.5) {
            ew_in += std::min(err[i], err_a[i]);
        } else {
            const double importance = 2.0 - std::exp(decay * std::sqrt(field.sq_dist[i]));
            ew_out += err[i] * importance;
        }
    }
    const double tp_w = static_cast<double>(positives) - ew_in;
    const double recall = 1.0 - ew_in / static_cast<double>(positives);
    const double precision = (tp_w + ew_out) > 0.0 ? tp_w / (tp_w + ew_out) : 0.0;
    return f_score(precision, recall, beta_sq);
}

double mae(const AlphaMatte& pred, const BinaryMask& gt) {
    check_pair(pred, gt, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        s += std::abs(pred[i] - gt[i]);
    }
    return s / static_cast<double>(pred.size());
}

namespace {

struct Region {
    std::size_t x0, y0, x1, y1;  // half-open

    std::size_t area() const { return (x1 - x0) * (y1 - y0); }
};

double object_similarity(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = values.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

double region_ssim(const AlphaMatte& pred, const BinaryMask& gt, const Region& r) {
    const double n = static_cast<double>(r.area());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t y = r.y0; y < r.y1; ++y) {
        for (std::size_t x = r.x0; x < r.x1; ++x) {
            mx += pred(x, y);
            my += gt(x, y);
        }
    }
    mx /= n;
    my /= n;
    double sx = 0.0;
    double sy = 0.0;
    double sxy = 0.0;
    for (std::size_t y = r.y0; y < r.y1; ++y) {
        for (std::size_t x = r.x0; x < r.x1; ++x) {
            const double dx = pred(x, y) - mx;
            const double dy = gt(x, y) - my;
            sx += dx * dx;
            sy += dy * dy;
            sxy += dx * dy;
        }
    }
    if (r.area() > 1) {
        sx /= n - 1.0;
        sy /= n - 1.0;
        sxy /= n - 1.0;
    } else {
        sx = sy = sxy = 0.0;
    }
    const double a = 4.0 * mx * my * sxy;
    const double b = (mx * mx + my * my) * (sx + sy);
    if (a != 0.0) {
        return a / (b + kEps);
    }
    return b == 0.0 ? 1.0 : 0.0;
}

}  // namespace

double s_measure(const AlphaMatte& pred, const BinaryMask& gt, double alpha) {
    check_pair(pred, gt, "s_measure");
    const std::size_t w = gt.width();
    const std::size_t h = gt.height();
    const double n = static_cast<double>(gt.size());
    double gt_mean = 0.0;
    double pred_mean = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt_mean += gt[i];
        pred_mean += pred[i];
    }
    gt_mean /= n;
    pred_mean /= n;
    if (gt_mean == 0.0) {
        return 1.0 - pred_mean;
    }
    if (gt_mean == 1.0) {
        return pred_mean;
    }

    std::vector<double> fg;
    std::vector<double> bg;
    double cx = 0.0;
    double cy = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (gt(x, y) > 0.5) {
                fg.push_back(pred(x, y));
                cx += static_cast<double>(x);
                cy += static_cast<double>(y);
                ++count;
            } else {
                bg.push_back(1.0 - pred(x, y));
            }
        }
    }
    const double object = gt_mean * object_similarity(fg) + (1.0 - gt_mean) * object_similarity(bg);

    // split at the (rounded, one-past) centroid
    const auto sx = std::min(w, static_cast<std::size_t>(std::nearbyint(cx / static_cast<double>(count))) + 1);
    const auto sy = std::min(h, static_cast<std::size_t>(std::nearbyint(cy / static_cast<double>(count))) + 1);
    const std::array<Region, 4> parts{{{0, 0, sx, sy}, {sx, 0, w, sy}, {0, sy, sx, h}, {sx, sy, w, h}}};
    double region = 0.0;
    for (const auto& part : parts) {
        if (part.area() == 0) continue;
        region += static_cast<double>(part.area()) / n * region_ssim(pred, gt, part);
    }
    return std::max(0.0, alpha * object + (1.0 - alpha) * region);
}

EMeasureMode parse_e_measure_mode(std::string_view name) {
    if (name == "mean") return EMeasureMode::mean;
    if (name == "max") return EMeasureMode::max;
    if (name == "adaptive") return EMeasureMode::adaptive;
    throw std::invalid_argument("unknown E-measure mode '" + std::string(name) + "'");
}

namespace {

// E-measure from the four (pred, gt) co-occurrence counts.
double e_measure_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    const double n = static_cast<double>(tp + fp + fn + tn);
    const double mean_p = static_cast<double>(tp + fp) / n;
    const double mean_g = static_cast<double>(tp + fn) / n;
    if (tp + fn == 0 || fp + tn == 0) {
        return 1.0 - std::abs(mean_p - mean_g);
    }
    auto enhanced = [&](double p, double g) {
        const double dp = p - mean_p;
        const double dg = g - mean_g;
        const double denom = dp * dp + dg * dg;
        const double align = denom > 0.0 ? 2.0 * dp * dg / denom : 0.0;
        return (align + 1.0) * (align + 1.0) / 4.0;
    };
    const double total = static_cast<double>(tp) * enhanced(1, 1) + static_cast<double>(fp) * enhanced(1, 0) +
                         static_cast<double>(fn) * enhanced(0, 1) + static_cast<double>(tn) * enhanced(0, 0);
    return total / n;
}

}  // namespace

double e_measure_binary(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt, "e_measure");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] > 0.5;
        const bool g = gt[i] > 0.5;
        tp += (p && g) ? 1 : 0;
        fp += (p && !g) ? 1 : 0;
        fn += (!p && g) ? 1 : 0;
        tn += (!p && !g) ? 1 : 0;
    }
    return e_measure_counts(tp, fp, fn, tn);
}

double e_measure(const AlphaMatte& pred, const BinaryMask& gt, EMeasureMode mode) {
    check_pair(pred, gt, "e_measure");
    if (mode == EMeasureMode::adaptive) {
        double m = 0.0;
        for (double v : pred.values()) m += v;
        const double t = std::min(2.0 * m / static_cast<double>(pred.size()), 1.0);
        BinaryMask bin(pred.width(), pred.height());
        for (std::size_t i = 0; i < pred.size(); ++i) bin[i] = pred[i] >= t ? 1.0 : 0.0;
        return e_measure_binary(bin, gt);
    }
    std::array<std::size_t, kLevels> fg_hist{};
    std::array<std::size_t, kLevels> bg_hist{};
    const auto levels = quantize(pred);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (gt[i] > 0.5) {
            ++fg_hist[static_cast<std::size_t>(levels[i])];
            ++positives;
        } else {
            ++bg_hist[static_cast<std::size_t>(levels[i])];
        }
    }
    const std::size_t negatives = levels.size() - positives;
    double sum = 0.0;
    double best = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t t = kLevels - 1; t >= 1; --t) {
        tp += fg_hist[t];
        fp += bg_hist[t];
        const double e = e_measure_counts(tp, fp, positives - tp, negatives - fp);
        sum += e;
        best = std::max(best, e);
    }
    return mode == EMeasureMode::max ? best : sum / static_cast<double>(kLevels - 1);
}

std::size_t closed_polygon_vertices(const std::vector<std::pair<long, long>>& contour,
                                    double tolerance) {
    if (contour.size() <= 2) {
        return contour.size();
    }
    auto dist = [](const std::pair<long, long>& p, const std::pair<long, long>& a,
                   const std::pair<long, long>& b) {
        const double dx = static_cast<double>(b.first - a.first);
        const double dy = static_cast<double>(b.second - a.second);
        const double px = static_cast<double>(p.first - a.first);
        const double py = static_cast<double>(p.second - a.second);
        const double len = std::hypot(dx, dy);
        if (len == 0.0) return std::hypot(px, py);
        return std::abs(dx * py - dy * px) / len;
    };
    // anchor at index 0 and the point farthest from it
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 1; i < contour.size(); ++i) {
        const double d = std::hypot(static_cast<double>(contour[i].first - contour[0].first),
                                    static_cast<double>(contour[i].second - contour[0].second));
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    std::vector<bool> keep(contour.size(), false);
    keep[0] = true;
    keep[far] = true;
    // iterative Douglas-Peucker over index ranges [a, b] (b may be size() = index 0)
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, far}, {far, contour.size()}};
    while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        const auto& pa = contour[a];
        const auto& pb = contour[b % contour.size()];
        double worst = -1.0;
        std::size_t idx = a;
        for (std::size_t i = a + 1; i < b; ++i) {
            const double d = dist(contour[i], pa, pb);
            if (d > worst) {
                worst = d;
                idx = i;
            }
        }
        if (worst > tolerance) {
            keep[idx] = true;
            stack.emplace_back(a, idx);
            stack.emplace_back(idx, b);
        }
    }
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

std::vector<std::pair<long, long>> trace_contour(const std::vector<std::uint8_t>& region,
                                                 std::size_t width, std::size_t height,
                                                 std::size_t start) {
    // clockwise in image coordinates, starting west
    static constexpr std::array<std::pair<long, long>, 8> kDirs{
        {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};
    auto inside = [&](long x, long y) {
        return x >= 0 && y >= 0 && x < static_cast<long>(width) && y < static_cast<long>(height) &&
               region[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] != 0;
    };
    auto dir_index = [](long dx, long dy) {
        for (std::size_t k = 0; k < kDirs.size(); ++k) {
            if (kDirs[k].first == dx && kDirs[k].second == dy) return k;
        }
        return std::size_t{0};
    };
    const std::pair<long, long> s{static_cast<long>(start % width), static_cast<long>(start / width)};
    std::vector<std::pair<long, long>> contour{s};
    auto p = s;
    std::size_t back = 0;  // direction from p to the backtrack pixel
    std::pair<long, long> first_next{-1, -1};
    const std::size_t limit = 4 * width * height + 8;
    for (std::size_t step = 0; step < limit; ++step) {
        bool found = false;
        std::pair<long, long> next{};
        std::size_t next_back = 0;
        for (std::size_t k = 1; k <= 8; ++k) {
            const std::size_t d = (back + k) % 8;
            const long nx = p.first + kDirs[d].first;
            const long ny = p.second + kDirs[d].second;
            if (inside(nx, ny)) {
                const auto& prev = kDirs[(d + 7) % 8];
                next = {nx, ny};
                next_back = dir_index(p.first + prev.first - nx, p.second + prev.second - ny);
                found = true;
                break;
            }
        }
        if (!found) {
            break;  // isolated pixel
        }
        if (step == 0) {
            first_next = next;
        } else if (p == s && next == first_next) {
            break;
        }
        p = next;
        back = next_back;
        contour.push_back(p);
    }
    if (contour.size() > 1 && contour.back() == s) {
        contour.pop_back();
    }
    return contour;
}

std::size_t hce(const AlphaMatte& pred, const BinaryMask& gt, std::size_t gamma) {
    check_pair(pred, gt, "hce");
    const std::size_t w = gt.width();
    const std::size_t h = gt.height();
    const std::size_t n = gt.size();
    std::vector<std::uint8_t> boundary(n, 0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (gt(x, y) <= 0.5) continue;
            const bool edge = (x > 0 && gt(x - 1, y) <= 0.5) || (x + 1 < w && gt(x + 1, y) <= 0.5) ||
                              (y > 0 && gt(x, y - 1) <= 0.5) || (y + 1 < h && gt(x, y + 1) <= 0.5);
            boundary[y * w + x] = edge ? 1 : 0;
        }
    }
    // square dilation of the boundary by gamma, separably
    const long r = static_cast<long>(gamma);
    std::vector<std::uint8_t> rows(n, 0);
    for (std::size_t y = 0; y < h; ++y) {
        long last = -1 - 2 * r;
        for (std::size_t x = 0; x < w + static_cast<std::size_t>(r); ++x) {
            if (x < w && boundary[y * w + x]) last = static_cast<long>(x);
            const long cx = static_cast<long>(x) - r;
            if (cx >= 0 && cx < static_cast<long>(w) && static_cast<long>(x) - last <= 2 * r) {
                rows[y * w + static_cast<std::size_t>(cx)] = 1;
            }
        }
    }
    std::vector<std::uint8_t> band(n, 0);
    for (std::size_t x = 0; x < w; ++x) {
        long last = -1 - 2 * r;
        for (std::size_t y = 0; y < h + static_cast<std::size_t>(r); ++y) {
            if (y < h && rows[y * w + x]) last = static_cast<long>(y);
            const long cy = static_cast<long>(y) - r;
            if (cy >= 0 && cy < static_cast<long>(h) && static_cast<long>(y) - last <= 2 * r) {
                band[static_cast<std::size_t>(cy) * w + x] = 1;
            }
        }
    }
    std::vector<std::uint8_t> fp(n, 0);
    std::vector<std::uint8_t> fn(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool p = pred[i] >= 0.5;
        const bool g = gt[i] > 0.5;
        fp[i] = (p && !g && !band[i]) ? 1 : 0;
        fn[i] = (!p && g && !band[i]) ? 1 : 0;
    }
    std::size_t clicks = 0;
    std::vector<std::uint8_t> region(n, 0);
    for (const auto* errors : {&fp, &fn}) {
        const auto cc = detail::label_components(*errors, w, h, 8);
        std::vector<std::size_t> first(cc.count(), n);
        for (std::size_t i = 0; i < n; ++i) {
            if (cc.labels[i] != 0 && first[cc.labels[i] - 1] == n) first[cc.labels[i] - 1] = i;
        }
        for (std::size_t k = 0; k < cc.count(); ++k) {
            for (std::size_t i = 0; i < n; ++i) region[i] = cc.labels[i] == k + 1 ? 1 : 0;
            const auto contour = trace_contour(region, w, h, first[k]);
            clicks += closed_polygon_vertices(contour, static_cast<double>(gamma));
        }
    }
    return clicks;
}

DisReport dis_report(const AlphaMatte& pred, const BinaryMask& gt, const DisOptions& options) {
    DisReport r;
    r.max_f = max_f_measure(pred, gt, options.max_f_beta_sq);
    r.weighted_f = weighted_f_measure(pred, gt, options.weighted_f_beta_sq);
    r.mae = mae(pred, gt);
    r.s_measure = s_measure(pred, gt, options.s_alpha);
    r.e_measure = e_measure(pred, gt, options.e_mode);
    r.hce = hce(pred, gt, options.hce_gamma);
    return r;
}

}  // namespace fclm
