#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "crbf/linalg.hpp"

namespace crbf {

/// Kernel inputs are clamped here before exp(-v); exp(-700) is about
/// 1e-304, still a positive normal double.
inline constexpr double kKernelInputMax = 700.0;

/// Gaussian kernel phi = exp(-v), v >= 0.
inline double kernel(double v) {
    return std::exp(-std::min(v, kKernelInputMax));
}

/// Kernel input v_m = ||y_prev - gamma_m||^2 / sigma_m.
inline double kernel_input(const ComplexVector& y_prev, const ComplexVector& gamma_m,
                           double sigma_m) {
    if (sigma_m <= 0.0)
        throw std::invalid_argument("kernel_input: sigma must be > 0");
    return sq_distance(y_prev, gamma_m) / sigma_m;
}

/// Dataset normalization statistics; stored with the network so saved
/// models normalize inference inputs identically.
struct NormStats {
    enum class Mode { Symmetric, Asymmetric };
    Mode mode = Mode::Symmetric;
    // symmetric
    cplx mean{0.0, 0.0};
    double variance = 1.0;
    // asymmetric (per-component)
    double mean_re = 0.0, mean_im = 0.0;
    double var_re = 0.0, var_im = 0.0;
    // sqrt(c_sigma * mu_v / (2 * dim))
    double scale = 1.0;
};

inline cplx normalize_sample(cplx z, const NormStats& s) {
    if (s.mode == NormStats::Mode::Symmetric)
        return (z - s.mean) / std::sqrt(s.variance) * s.scale;
    return cplx{(z.real() - s.mean_re) / std::sqrt(2.0 * s.var_re),
                (z.imag() - s.mean_im) / std::sqrt(2.0 * s.var_im)} *
           s.scale;
}

inline cplx denormalize_sample(cplx z, const NormStats& s) {
    if (s.mode == NormStats::Mode::Symmetric)
        return z / s.scale * std::sqrt(s.variance) + s.mean;
    return cplx{z.real() / s.scale * std::sqrt(2.0 * s.var_re) + s.mean_re,
                z.imag() / s.scale * std::sqrt(2.0 * s.var_im) + s.mean_im};
}

inline ComplexVector normalize_vector(const ComplexVector& v, const NormStats& s) {
    ComplexVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = normalize_sample(v[i], s);
    return out;
}

inline ComplexVector denormalize_vector(const ComplexVector& v, const NormStats& s) {
    ComplexVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = denormalize_sample(v[i], s);
    return out;
}

/// One hidden layer: I neurons, O outputs.
///   W     O x I   complex synaptic weights
///   b     O       complex bias
///   Gamma I x O_prev  complex centers, one row per neuron
///   sigma I       real kernel variances, strictly positive
struct Layer {
    ComplexMatrix W;
    ComplexVector b;
    ComplexMatrix Gamma;
    RealVector sigma;

    // forward cache, valid between a forward pass and the matching
    // backward pass on the same sample
    RealVector phi;
    RealVector v;
    ComplexVector input;  // y^{l-1}
    ComplexVector output; // y^{l}
    bool cache_valid = false;

    std::size_t neurons() const { return Gamma.rows(); }
    std::size_t outputs() const { return W.rows(); }
    std::size_t fan_in() const { return Gamma.cols(); }

    Layer() = default;

    Layer(std::size_t n_neurons, std::size_t n_in, std::size_t n_out)
        : W(n_out, n_neurons),
          b(n_out, cplx{0.0, 0.0}),
          Gamma(n_neurons, n_in),
          sigma(n_neurons, 1.0),
          phi(n_neurons, 0.0),
          v(n_neurons, 0.0),
          input(n_in, cplx{0.0, 0.0}),
          output(n_out, cplx{0.0, 0.0}) {}

    void check_shapes() const {
        if (Gamma.rows() != sigma.size() || Gamma.rows() != W.cols())
            throw std::invalid_argument("Layer: neuron-count mismatch");
        if (W.rows() != b.size())
            throw std::invalid_argument("Layer: output-count mismatch");
        for (double s : sigma)
            if (!(s > 0.0))
                throw std::invalid_argument("Layer: sigma must be strictly positive");
    }
};

/// y = W phi + b with phi_m = exp(-||y_prev - gamma_m||^2 / sigma_m).
/// Stores v, phi, and the input in the layer cache.
inline const ComplexVector& layer_forward(Layer& layer, const ComplexVector& y_prev) {
    const std::size_t n_in = layer.fan_in();
    const std::size_t n_neurons = layer.neurons();
    const std::size_t n_out = layer.outputs();
    if (y_prev.size() != n_in)
        throw std::invalid_argument("layer_forward: input length mismatch");

    layer.input = y_prev;
    for (std::size_t m = 0; m < n_neurons; ++m) {
        const double d2 = sq_distance(y_prev.data(), layer.Gamma.row(m), n_in);
        const double vm = d2 / layer.sigma[m];
        layer.v[m] = vm;
        layer.phi[m] = kernel(vm);
    }
    for (std::size_t r = 0; r < n_out; ++r) {
        cplx acc = layer.b[r];
        const cplx* wrow = layer.W.row(r);
        for (std::size_t m = 0; m < n_neurons; ++m) acc += wrow[m] * layer.phi[m];
        layer.output[r] = acc;
        if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag()))
            throw std::runtime_error("layer_forward: non-finite output");
    }
    layer.cache_valid = true;
    return layer.output;
}

/// Deep C-RBF network operating on normalized data.
struct Network {
    std::size_t P = 0; // inputs
    std::size_t R = 0; // outputs
    std::vector<Layer> layers;
    NormStats input_norm;
    NormStats output_norm;

    std::size_t depth() const { return layers.size(); }

    void check_shapes() const {
        if (layers.empty())
            throw std::invalid_argument("Network: needs at least one layer");
        if (layers.front().fan_in() != P)
            throw std::invalid_argument("Network: first layer fan-in != P");
        if (layers.back().outputs() != R)
            throw std::invalid_argument("Network: last layer outputs != R");
        for (std::size_t l = 1; l < layers.size(); ++l)
            if (layers[l].fan_in() != layers[l - 1].outputs())
                throw std::invalid_argument("Network: layer dimension chain broken");
        for (const auto& layer : layers) layer.check_shapes();
    }
};

/// Builds an unparameterized network from neuron counts per hidden
/// layer; layer l has I^{l} neurons and O^{l} outputs, with O^{l} equal
/// to the next layer's neuron count and O^{L} = R.
inline Network make_network(std::size_t P, const std::vector<std::size_t>& neurons,
                            std::size_t R) {
    if (neurons.empty())
        throw std::invalid_argument("make_network: empty architecture");
    Network net;
    net.P = P;
    net.R = R;
    std::size_t fan_in = P;
    for (std::size_t l = 0; l < neurons.size(); ++l) {
        const std::size_t n_out = (l + 1 < neurons.size()) ? neurons[l + 1] : R;
        net.layers.emplace_back(neurons[l], fan_in, n_out);
        fan_in = n_out;
    }
    return net;
}

/// Chains layer_forward over all layers; y^{0} = x (already normalized).
inline const ComplexVector& network_forward(Network& net, const ComplexVector& x) {
    if (x.size() != net.P)
        throw std::invalid_argument("network_forward: input length != P");
    const ComplexVector* y = &x;
    for (auto& layer : net.layers) y = &layer_forward(layer, *y);
    return *y;
}

/// Quadratic cost J = 1/2 ||d - y||^2.
inline double cost(const ComplexVector& d, const ComplexVector& y) {
    if (d.size() != y.size())
        throw std::invalid_argument("cost: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += std::norm(d[i] - y[i]);
    return 0.5 * acc;
}

/// Inference on raw (unnormalized) input: normalize, forward,
/// denormalize back to the original output scale.
inline ComplexVector predict(Network& net, const ComplexVector& x_raw) {
    const ComplexVector x = normalize_vector(x_raw, net.input_norm);
    const ComplexVector& y = network_forward(net, x);
    return denormalize_vector(y, net.output_norm);
}

} // namespace crbf
