#include "fclm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fclm {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                    " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

bool DenseMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("cosine_similarity: length mismatch");
    }
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_similarity: degenerate vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

CosineGrad cosine_similarity_grad(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("cosine_similarity_grad: length mismatch");
    }
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_similarity_grad: degenerate vector");
    }
    const double cos = dot(a, b) / (na * nb);
    CosineGrad g{std::vector<double>(a.size()), std::vector<double>(b.size())};
    for (std::size_t i = 0; i < a.size(); ++i) {
        g.d_a[i] = b[i] / (na * nb) - cos * a[i] / (na * na);
        g.d_b[i] = a[i] / (na * nb) - cos * b[i] / (nb * nb);
    }
    return g;
}

namespace {

// log-sum-exp of x / temperature
double log_sum_exp(std::span<const double> x, double temperature) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x) {
        m = std::max(m, v / temperature);
    }
    double s = 0.0;
    for (double v : x) {
        s += std::exp(v / temperature - m);
    }
    return m + std::log(s);
}

void check_softmax_input(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("softmax: temperature must be positive");
    }
    if (logits.empty()) {
        throw std::invalid_argument("softmax: empty input");
    }
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("softmax: non-finite input");
        }
    }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits, double temperature) {
    check_softmax_input(logits, temperature);
    const double lse = log_sum_exp(logits, temperature);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] / temperature - lse);
    }
    return out;
}

DenseMatrix row_softmax(const DenseMatrix& m, double temperature) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto p = softmax(m.row(r), temperature);
        std::copy(p.begin(), p.end(), out.row(r).begin());
    }
    return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("kl_divergence: length mismatch");
    }
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0 || !std::isfinite(p[i]) || !std::isfinite(q[i])) {
            throw std::invalid_argument("kl_divergence: negative or non-finite entry");
        }
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
        throw std::invalid_argument("kl_divergence: inputs must sum to 1");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            kl += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kKlFloor)));
        }
    }
    return kl;
}

SoftmaxKl softmax_kl(std::span<const double> student_logits,
                     std::span<const double> teacher_logits, double temperature) {
    if (student_logits.size() != teacher_logits.size()) {
        throw std::invalid_argument("softmax_kl: length mismatch");
    }
    check_softmax_input(student_logits, temperature);
    check_softmax_input(teacher_logits, temperature);
    const std::size_t n = student_logits.size();
    const double lse_s = log_sum_exp(student_logits, temperature);
    const double lse_t = log_sum_exp(teacher_logits, temperature);
    const double log_floor = std::log(kKlFloor);

    std::vector<double> log_p(n), log_q(n), p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        log_p[i] = student_logits[i] / temperature - lse_s;
        log_q[i] = std::max(teacher_logits[i] / temperature - lse_t, log_floor);
        p[i] = std::exp(log_p[i]);
        q[i] = std::exp(teacher_logits[i] / temperature - lse_t);
    }
    SoftmaxKl out;
    for (std::size_t i = 0; i < n; ++i) {
        out.value += p[i] * (log_p[i] - log_q[i]);
    }
    out.d_student.resize(n);
    out.d_teacher.resize(n);
    // The floor is ignored in the gradient; it only bites when q_i < 1e-12.
    for (std::size_t i = 0; i < n; ++i) {
        out.d_student[i] = p[i] * (log_p[i] - log_q[i] - out.value) / temperature;
        out.d_teacher[i] = (q[i] - p[i]) / temperature;
    }
    return out;
}

double Rng::uniform() {
    // 53 random mantissa bits.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::index: empty range");
    }
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return static_cast<std::size_t>(x % bound);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace fclm
