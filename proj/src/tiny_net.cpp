#include "fclm/tiny_net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fclm {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu:
            return z > 0.0 ? z : 0.0;
        case Activation::sigmoid:
            return sigmoid(z);
        case Activation::none:
            break;
    }
    return z;
}

// d activation / d z, expressed through z and the activated value y.
double activate_grad(Activation a, double z, double y) {
    switch (a) {
        case Activation::relu:
            return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid:
            return y * (1.0 - y);
        case Activation::none:
            break;
    }
    return 1.0;
}

std::vector<LinearLayer> make_layers(std::span<const std::size_t> dims,
                                     std::span<const Activation> activations) {
    if (dims.size() < 2 || activations.size() + 1 != dims.size()) {
        throw std::invalid_argument("TinyNet: need n+1 dims for n activations");
    }
    std::vector<LinearLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        layers.push_back({DenseMatrix(dims[l + 1], dims[l]),
                          std::vector<double>(dims[l + 1], 0.0), activations[l]});
    }
    return layers;
}

}  // namespace

TinyNet::TinyNet(std::vector<LinearLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw std::invalid_argument("TinyNet: no layers");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].out_dim()) {
            throw std::invalid_argument("TinyNet: bias size mismatch in layer " + std::to_string(l));
        }
        if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim()) {
            throw std::invalid_argument("TinyNet: layer " + std::to_string(l) +
                                        " input does not chain with previous output");
        }
    }
}

TinyNet TinyNet::random(std::span<const std::size_t> dims, std::span<const Activation> activations,
                        Rng& rng, double gain) {
    auto layers = make_layers(dims, activations);
    for (auto& layer : layers) {
        const double scale = gain / std::sqrt(static_cast<double>(layer.in_dim()));
        for (double& w : layer.weight.data()) {
            w = scale * rng.normal();
        }
    }
    return TinyNet(std::move(layers));
}

TinyNet TinyNet::zeros(std::span<const std::size_t> dims, std::span<const Activation> activations) {
    return TinyNet(make_layers(dims, activations));
}

std::size_t TinyNet::input_dim() const {
    return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t TinyNet::output_dim() const {
    return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t TinyNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        n += layer.weight.size() + layer.bias.size();
    }
    return n;
}

std::vector<double> TinyNet::parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& layer : layers_) {
        p.insert(p.end(), layer.weight.data().begin(), layer.weight.data().end());
        p.insert(p.end(), layer.bias.begin(), layer.bias.end());
    }
    return p;
}

void TinyNet::set_parameters(std::span<const double> params) {
    if (params.size() != parameter_count()) {
        throw std::invalid_argument("TinyNet::set_parameters: expected " +
                                    std::to_string(parameter_count()) + " values");
    }
    std::size_t k = 0;
    for (auto& layer : layers_) {
        for (double& w : layer.weight.data()) {
            w = params[k++];
        }
        for (double& b : layer.bias) {
            b = params[k++];
        }
    }
}

void TinyNet::descend(std::span<const double> grad, double rate) {
    if (grad.size() != parameter_count()) {
        throw std::invalid_argument("TinyNet::descend: gradient size mismatch");
    }
    std::size_t k = 0;
    for (auto& layer : layers_) {
        for (double& w : layer.weight.data()) {
            w -= rate * grad[k++];
        }
        for (double& b : layer.bias) {
            b -= rate * grad[k++];
        }
    }
}

std::vector<double> TinyNet::forward(std::span<const double> x) const {
    NetTrace trace;
    return forward(x, trace);
}

std::vector<double> TinyNet::forward(std::span<const double> x, NetTrace& trace) const {
    if (x.size() != input_dim()) {
        throw std::invalid_argument("TinyNet::forward: input dimension " + std::to_string(x.size()) +
                                    " != " + std::to_string(input_dim()));
    }
    trace.inputs.assign(layers_.size(), {});
    trace.pre.assign(layers_.size(), {});
    std::vector<double> current(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        std::vector<double> z(layer.out_dim());
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            z[o] = layer.bias[o] + dot(layer.weight.row(o), current);
        }
        std::vector<double> y(z.size());
        for (std::size_t o = 0; o < z.size(); ++o) {
            y[o] = activate(layer.activation, z[o]);
        }
        trace.inputs[l] = std::move(current);
        trace.pre[l] = std::move(z);
        current = std::move(y);
    }
    trace.output = current;
    return current;
}

std::vector<double> TinyNet::backward(const NetTrace& trace, std::span<const double> grad,
                                      std::span<double> param_grad, GradientAt at) const {
    if (param_grad.size() != parameter_count()) {
        throw std::invalid_argument("TinyNet::backward: parameter gradient size mismatch");
    }
    if (grad.size() != output_dim() || trace.pre.size() != layers_.size()) {
        throw std::invalid_argument("TinyNet::backward: trace or gradient does not match network");
    }
    // offsets of each layer's parameters in the flat vector
    std::vector<std::size_t> offset(layers_.size());
    std::size_t k = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        offset[l] = k;
        k += layers_[l].weight.size() + layers_[l].bias.size();
    }

    std::vector<double> upstream(grad.begin(), grad.end());
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const auto& z = trace.pre[l];
        const auto& in = trace.inputs[l];
        const bool skip_activation = (at == GradientAt::last_preactivation && l + 1 == layers_.size());
        std::vector<double> dz(z.size());
        for (std::size_t o = 0; o < z.size(); ++o) {
            dz[o] = skip_activation
                        ? upstream[o]
                        : upstream[o] * activate_grad(layer.activation, z[o],
                                                      activate(layer.activation, z[o]));
        }
        double* dw = param_grad.data() + offset[l];
        double* db = dw + layer.weight.size();
        std::vector<double> dx(layer.in_dim(), 0.0);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            if (dz[o] == 0.0) {
                continue;
            }
            const auto w = layer.weight.row(o);
            double* dwo = dw + o * layer.in_dim();
            for (std::size_t i = 0; i < layer.in_dim(); ++i) {
                dwo[i] += dz[o] * in[i];
                dx[i] += dz[o] * w[i];
            }
            db[o] += dz[o];
        }
        upstream = std::move(dx);
    }
    return upstream;
}

}  // namespace fclm
