#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fclm/numerics.hpp"

namespace fclm {

enum class Activation { none, relu, sigmoid };

struct LinearLayer {
    DenseMatrix weight;  // out x in
    std::vector<double> bias;
    Activation activation = Activation::none;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
};

/// Activations cached by a forward pass, consumed by backward().
struct NetTrace {
    std::vector<std::vector<double>> inputs;  // input of each layer
    std::vector<std::vector<double>> pre;     // pre-activation of each layer
    std::vector<double> output;
};

/// Where the gradient handed to backward() is taken.
enum class GradientAt { output, last_preactivation };

/// Small feed-forward network with explicit backward rules. Parameters are
/// flattened layer by layer: weights row-major, then bias.
class TinyNet {
public:
    TinyNet() = default;
    explicit TinyNet(std::vector<LinearLayer> layers);

    /// Layer sizes dims[0] -> dims[1] -> ...; activations has dims.size()-1
    /// entries. Weights ~ N(0, gain^2 / fan_in), biases zero.
    static TinyNet random(std::span<const std::size_t> dims,
                          std::span<const Activation> activations, Rng& rng, double gain = 1.0);
    /// Same layout as random() with every parameter zero.
    static TinyNet zeros(std::span<const std::size_t> dims,
                         std::span<const Activation> activations);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;
    const std::vector<LinearLayer>& layers() const { return layers_; }
    std::vector<LinearLayer>& layers() { return layers_; }

    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> params);
    /// params -= rate * grad
    void descend(std::span<const double> grad, double rate);

    std::vector<double> forward(std::span<const double> x) const;
    std::vector<double> forward(std::span<const double> x, NetTrace& trace) const;

    /// Backpropagates grad (at the output, or at the last pre-activation) and
    /// accumulates parameter gradients into param_grad. Returns the gradient
    /// with respect to the network input.
    std::vector<double> backward(const NetTrace& trace, std::span<const double> grad,
                                 std::span<double> param_grad,
                                 GradientAt at = GradientAt::output) const;

private:
    std::vector<LinearLayer> layers_;
};

double sigmoid(double z);

}  // namespace fclm
