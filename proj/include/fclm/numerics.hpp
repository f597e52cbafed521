#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fclm {

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// a.b / (|a| |b|). Throws on length mismatch or a zero-norm input.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Gradients of cosine_similarity(a, b) with respect to a and b.
struct CosineGrad {
    std::vector<double> d_a;
    std::vector<double> d_b;
};
CosineGrad cosine_similarity_grad(std::span<const double> a, std::span<const double> b);

/// Softmax of logits / temperature with max subtraction.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
DenseMatrix row_softmax(const DenseMatrix& m, double temperature);

inline constexpr double kKlFloor = 1e-12;

/// sum p_i ln(p_i / max(q_i, 1e-12)), with 0 ln 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// KL(softmax(s/T) || softmax(t/T)) and its gradients with respect to the
/// logits s and t.
struct SoftmaxKl {
    double value = 0.0;
    std::vector<double> d_student;
    std::vector<double> d_teacher;
};
SoftmaxKl softmax_kl(std::span<const double> student_logits,
                     std::span<const double> teacher_logits, double temperature);

/// Seeded generator with platform-independent draws (std distributions are
/// implementation-defined, mt19937_64 itself is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double normal();
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a stream id.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fclm
