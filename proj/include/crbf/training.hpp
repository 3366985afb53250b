#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "crbf/network.hpp"
#include "crbf/rng.hpp"

namespace crbf {

/// Per-layer steepest-descent step sizes.
struct LayerRates {
    double eta_w = 0.0;
    double eta_b = 0.0;
    double eta_gamma = 0.0;
    double eta_sigma = 0.0;
};

struct TrainConfig {
    std::vector<LayerRates> rates; // one entry per layer
    std::size_t epochs = 1000;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

/// sigma entries are clamped here when an update would drive them lower.
inline constexpr double kSigmaFloor = 1e-6;

/// Workspace for one backward pass; reusable across samples.
struct BackwardState {
    std::vector<ComplexVector> psi;  // psi[l], length O^{l}
    std::vector<RealVector> delta;   // delta[l], length I^{l}
    std::vector<RealVector> beta;    // beta[l], length I^{l}

    void resize(const Network& net) {
        const std::size_t L = net.depth();
        psi.resize(L);
        delta.resize(L);
        beta.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            psi[l].assign(net.layers[l].outputs(), cplx{0.0, 0.0});
            delta[l].assign(net.layers[l].neurons(), 0.0);
            beta[l].assign(net.layers[l].neurons(), 0.0);
        }
    }
};

/// beta_m = phi_m / sigma_m from the layer's forward cache.
inline RealVector compute_beta(const Layer& layer) {
    if (!layer.cache_valid)
        throw std::logic_error("compute_beta: no valid forward cache");
    RealVector beta(layer.neurons());
    for (std::size_t m = 0; m < beta.size(); ++m) beta[m] = layer.phi[m] / layer.sigma[m];
    return beta;
}

/// delta_m = -xi_m * beta_m with xi = Re(W)^T Re(psi) + Im(W)^T Im(psi).
inline RealVector compute_delta(const Layer& layer, const ComplexVector& psi,
                                const RealVector& beta) {
    const std::size_t n_out = layer.outputs();
    const std::size_t n_neurons = layer.neurons();
    if (psi.size() != n_out || beta.size() != n_neurons)
        throw std::invalid_argument("compute_delta: dimension mismatch");
    RealVector delta(n_neurons, 0.0);
    for (std::size_t r = 0; r < n_out; ++r) {
        const cplx* wrow = layer.W.row(r);
        const double pr = psi[r].real();
        const double pi = psi[r].imag();
        for (std::size_t m = 0; m < n_neurons; ++m)
            delta[m] += wrow[m].real() * pr + wrow[m].imag() * pi;
    }
    for (std::size_t m = 0; m < n_neurons; ++m) delta[m] = -delta[m] * beta[m];
    return delta;
}

/// psi for the topmost layer: the error vector e = d - y^{L}.
inline ComplexVector compute_psi_top(const Layer& top, const ComplexVector& d) {
    if (!top.cache_valid)
        throw std::logic_error("compute_psi_top: no valid forward cache");
    if (d.size() != top.outputs())
        throw std::invalid_argument("compute_psi_top: desired length mismatch");
    ComplexVector e(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) e[r] = d[r] - top.output[r];
    return e;
}

/// psi for a hidden layer l < L: sum over neurons m of layer l+1 of
/// delta_m^{l+1} (y^{l} - gamma_m^{l+1}).
inline ComplexVector compute_psi_hidden(const Layer& next, const RealVector& delta_next) {
    if (!next.cache_valid)
        throw std::logic_error("compute_psi_hidden: no valid forward cache");
    if (delta_next.size() != next.neurons())
        throw std::invalid_argument("compute_psi_hidden: delta length mismatch");
    const std::size_t n = next.fan_in();
    ComplexVector psi(n, cplx{0.0, 0.0});
    for (std::size_t m = 0; m < next.neurons(); ++m) {
        const double dm = delta_next[m];
        if (dm == 0.0) continue;
        const cplx* grow = next.Gamma.row(m);
        for (std::size_t p = 0; p < n; ++p) psi[p] += dm * (next.input[p] - grow[p]);
    }
    return psi;
}

/// Fills psi/delta/beta for every layer from the current (pre-update)
/// parameters and forward caches. psi[l] needs delta[l+1]; delta[l]
/// needs psi[l].
inline void compute_backward_state(const Network& net, const ComplexVector& d,
                                   BackwardState& state) {
    const std::size_t L = net.depth();
    if (state.psi.size() != L) state.resize(net);
    for (std::size_t li = L; li-- > 0;) {
        const Layer& layer = net.layers[li];
        if (!layer.cache_valid)
            throw std::logic_error("compute_backward_state: stale forward cache");
        if (li + 1 == L) {
            state.psi[li] = compute_psi_top(layer, d);
        } else {
            state.psi[li] = compute_psi_hidden(net.layers[li + 1], state.delta[li + 1]);
        }
        state.beta[li] = compute_beta(layer);
        state.delta[li] = compute_delta(layer, state.psi[li], state.beta[li]);
    }
}

/// Applies the four steepest-descent updates to one layer:
///   W     += eta_w  psi phi^T
///   b     += eta_b  psi
///   Gamma -= eta_g  diag(delta) (Y_prev - Gamma)
///   sigma -= eta_s  delta (.) v
/// Returns the number of sigma entries clamped at the floor; the
/// forward cache is consumed.
inline std::size_t update_layer(Layer& layer, const ComplexVector& psi,
                                const RealVector& delta, const LayerRates& rates) {
    if (!layer.cache_valid)
        throw std::logic_error("update_layer: no valid forward cache");
    const std::size_t n_out = layer.outputs();
    const std::size_t n_neurons = layer.neurons();
    const std::size_t n_in = layer.fan_in();
    if (psi.size() != n_out || delta.size() != n_neurons)
        throw std::invalid_argument("update_layer: dimension mismatch");

    for (std::size_t r = 0; r < n_out; ++r) {
        cplx* wrow = layer.W.row(r);
        const cplx pr = psi[r];
        for (std::size_t m = 0; m < n_neurons; ++m)
            wrow[m] += rates.eta_w * pr * layer.phi[m];
        layer.b[r] += rates.eta_b * pr;
    }
    std::size_t clamped = 0;
    for (std::size_t m = 0; m < n_neurons; ++m) {
        cplx* grow = layer.Gamma.row(m);
        const double dm = delta[m];
        for (std::size_t p = 0; p < n_in; ++p)
            grow[p] -= rates.eta_gamma * dm * (layer.input[p] - grow[p]);
        double s = layer.sigma[m] - rates.eta_sigma * dm * layer.v[m];
        if (s < kSigmaFloor) {
            s = kSigmaFloor;
            ++clamped;
        }
        if (!std::isfinite(s))
            throw std::runtime_error("update_layer: non-finite sigma");
        layer.sigma[m] = s;
    }
    layer.cache_valid = false;
    return clamped;
}

/// Full backward pass and parameter update for the sample last seen by
/// network_forward. All psi/delta are computed from pre-update
/// parameters before any layer is mutated. Returns the pre-update cost.
inline double backward_and_update(Network& net, const ComplexVector& d,
                                  const std::vector<LayerRates>& rates,
                                  BackwardState& state,
                                  std::size_t* sigma_clamps = nullptr) {
    const std::size_t L = net.depth();
    if (rates.size() != L)
        throw std::invalid_argument("backward_and_update: rates size != layer count");
    compute_backward_state(net, d, state);
    double acc = 0.0;
    for (const auto& e : state.psi[L - 1]) acc += std::norm(e);
    const double J = 0.5 * acc;
    std::size_t clamped = 0;
    for (std::size_t l = 0; l < L; ++l)
        clamped += update_layer(net.layers[l], state.psi[l], state.delta[l], rates[l]);
    if (sigma_clamps) *sigma_clamps += clamped;
    return J;
}

inline double backward_and_update(Network& net, const ComplexVector& d,
                                  const std::vector<LayerRates>& rates) {
    BackwardState state;
    state.resize(net);
    return backward_and_update(net, d, rates, state);
}

/// Shallow (single-layer) closed-form update, kept as an independent
/// code path against the deep recursion:
///   W     += eta e phi^T,  b += eta e,
///   Gamma += eta diag(xi (.) beta)(X - Gamma),
///   sigma += eta xi (.) beta (.) v.
inline void shallow_update(Layer& layer, const ComplexVector& d, const LayerRates& rates) {
    if (!layer.cache_valid)
        throw std::logic_error("shallow_update: no valid forward cache");
    const std::size_t n_out = layer.outputs();
    const std::size_t n_neurons = layer.neurons();
    const std::size_t n_in = layer.fan_in();
    if (d.size() != n_out)
        throw std::invalid_argument("shallow_update: desired length mismatch");

    ComplexVector e(n_out);
    for (std::size_t r = 0; r < n_out; ++r) e[r] = d[r] - layer.output[r];

    RealVector xi(n_neurons, 0.0);
    for (std::size_t r = 0; r < n_out; ++r) {
        const cplx* wrow = layer.W.row(r);
        for (std::size_t m = 0; m < n_neurons; ++m)
            xi[m] += wrow[m].real() * e[r].real() + wrow[m].imag() * e[r].imag();
    }

    for (std::size_t r = 0; r < n_out; ++r) {
        cplx* wrow = layer.W.row(r);
        for (std::size_t m = 0; m < n_neurons; ++m)
            wrow[m] += rates.eta_w * e[r] * layer.phi[m];
        layer.b[r] += rates.eta_b * e[r];
    }
    for (std::size_t m = 0; m < n_neurons; ++m) {
        const double xb = xi[m] * layer.phi[m] / layer.sigma[m];
        cplx* grow = layer.Gamma.row(m);
        for (std::size_t p = 0; p < n_in; ++p)
            grow[p] += rates.eta_gamma * xb * (layer.input[p] - grow[p]);
        double s = layer.sigma[m] + rates.eta_sigma * xb * layer.v[m];
        if (s < kSigmaFloor) s = kSigmaFloor;
        layer.sigma[m] = s;
    }
    layer.cache_valid = false;
}

// ---------------------------------------------------------------------------
// Gradient verification

enum class ParamKind { Weight, Bias, Center, Variance };

/// Addresses one real scalar inside a network's parameters. Matrix
/// entries use row-major flat indices; `imag` selects the imaginary
/// component (must be false for Variance).
struct ParamCoord {
    std::size_t layer = 0;
    ParamKind kind = ParamKind::Weight;
    std::size_t index = 0;
    bool imag = false;
};

inline double* param_component(Network& net, const ParamCoord& c) {
    if (c.layer >= net.depth())
        throw std::invalid_argument("param_component: layer out of range");
    Layer& layer = net.layers[c.layer];
    auto part = [&](cplx& z) -> double* {
        return c.imag ? reinterpret_cast<double*>(&z) + 1 : reinterpret_cast<double*>(&z);
    };
    switch (c.kind) {
    case ParamKind::Weight:
        if (c.index >= layer.W.size())
            throw std::invalid_argument("param_component: W index out of range");
        return part(layer.W.data()[c.index]);
    case ParamKind::Bias:
        if (c.index >= layer.b.size())
            throw std::invalid_argument("param_component: b index out of range");
        return part(layer.b[c.index]);
    case ParamKind::Center:
        if (c.index >= layer.Gamma.size())
            throw std::invalid_argument("param_component: Gamma index out of range");
        return part(layer.Gamma.data()[c.index]);
    case ParamKind::Variance:
        if (c.imag)
            throw std::invalid_argument("param_component: sigma has no imaginary part");
        if (c.index >= layer.sigma.size())
            throw std::invalid_argument("param_component: sigma index out of range");
        return &layer.sigma[c.index];
    }
    throw std::invalid_argument("param_component: bad kind");
}

/// Central finite difference of the cost with respect to one real
/// parameter coordinate; restores the parameter afterward.
inline double fd_gradient(Network& net, const ComplexVector& x, const ComplexVector& d,
                          const ParamCoord& coord, double h = 1e-5) {
    if (!(h > 0.0))
        throw std::invalid_argument("fd_gradient: h must be > 0");
    double* p = param_component(net, coord);
    const double saved = *p;
    *p = saved + h;
    const double jp = cost(d, network_forward(net, x));
    *p = saved - h;
    const double jm = cost(d, network_forward(net, x));
    *p = saved;
    return (jp - jm) / (2.0 * h);
}

/// Analytic derivative of the cost with respect to one real parameter
/// coordinate, assembled from the psi/delta recursion. The recursion's
/// per-layer quantities relate to the true derivative through fixed
/// positive block constants: a factor 2^(L-1-l) for layer l (the
/// kernel chain doubles the real-coordinate sensitivity per level),
/// and an extra factor 2 on center coordinates.
inline double analytic_gradient(const Network& net, const BackwardState& state,
                                const ParamCoord& c) {
    const std::size_t L = net.depth();
    const Layer& layer = net.layers[c.layer];
    const double scale = std::pow(2.0, static_cast<double>(L - 1 - c.layer));
    switch (c.kind) {
    case ParamKind::Weight: {
        const std::size_t m = c.index % layer.W.cols();
        const std::size_t r = c.index / layer.W.cols();
        const cplx& psi = state.psi[c.layer][r];
        return -scale * (c.imag ? psi.imag() : psi.real()) * layer.phi[m];
    }
    case ParamKind::Bias: {
        const cplx& psi = state.psi[c.layer][c.index];
        return -scale * (c.imag ? psi.imag() : psi.real());
    }
    case ParamKind::Center: {
        const std::size_t p = c.index % layer.Gamma.cols();
        const std::size_t m = c.index / layer.Gamma.cols();
        const cplx diff = layer.input[p] - layer.Gamma.data()[c.index];
        return 2.0 * scale * state.delta[c.layer][m] * (c.imag ? diff.imag() : diff.real());
    }
    case ParamKind::Variance:
        return scale * state.delta[c.layer][c.index] * layer.v[c.index];
    }
    throw std::invalid_argument("analytic_gradient: bad kind");
}

// ---------------------------------------------------------------------------
// Epoch orchestration

/// MSE in dB; an MSE of exactly zero maps to -infinity.
inline double mse_db(double mse) {
    if (mse < 0.0)
        throw std::invalid_argument("mse_db: negative MSE");
    if (mse == 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mse);
}

/// Dataset prepared for training: normalized inputs/targets for the
/// optimizer, raw targets for constellation-scale MSE reporting.
struct NormalizedDataset {
    std::vector<ComplexVector> inputs;      // normalized
    std::vector<ComplexVector> targets;     // normalized
    std::vector<ComplexVector> targets_raw; // original symbol scale

    std::size_t size() const { return inputs.size(); }
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_mse = 0.0; // linear, per scalar output symbol
    double val_mse = 0.0;
    double train_mse_db = 0.0;
    double val_mse_db = 0.0;
    std::size_t sigma_clamps = 0;
};

/// MSE per scalar output symbol between denormalized network outputs
/// and raw targets, with frozen parameters.
inline double evaluate_mse(Network& net, const NormalizedDataset& data) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ComplexVector& y = network_forward(net, data.inputs[i]);
        const ComplexVector yhat = denormalize_vector(y, net.output_norm);
        const ComplexVector& d = data.targets_raw[i];
        for (std::size_t r = 0; r < d.size(); ++r) acc += std::norm(d[r] - yhat[r]);
        count += d.size();
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

/// One epoch of per-sample steepest descent. Training MSE is online
/// (each sample's output at the moment it was processed); validation
/// MSE uses frozen post-epoch parameters.
inline EpochMetrics train_epoch(Network& net, const NormalizedDataset& train,
                                const NormalizedDataset& val,
                                const std::vector<LayerRates>& rates, bool shuffle,
                                RngStream& rng, BackwardState& state,
                                std::size_t epoch_index = 0) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (shuffle) rng.shuffle(order);

    EpochMetrics metrics;
    metrics.epoch = epoch_index;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        try {
            const ComplexVector& y = network_forward(net, train.inputs[i]);
            const ComplexVector yhat = denormalize_vector(y, net.output_norm);
            const ComplexVector& d = train.targets_raw[i];
            for (std::size_t r = 0; r < d.size(); ++r) acc += std::norm(d[r] - yhat[r]);
            count += d.size();
            backward_and_update(net, train.targets[i], rates, state, &metrics.sigma_clamps);
        } catch (const std::runtime_error& ex) {
            throw std::runtime_error("divergence at epoch " + std::to_string(epoch_index) +
                                     ", sample " + std::to_string(i) + ": " + ex.what());
        }
    }
    metrics.train_mse = count ? acc / static_cast<double>(count) : 0.0;
    metrics.val_mse = evaluate_mse(net, val);
    if (!std::isfinite(metrics.train_mse) || !std::isfinite(metrics.val_mse))
        throw std::runtime_error("divergence at epoch " + std::to_string(epoch_index) +
                                 ": non-finite MSE");
    metrics.train_mse_db = mse_db(metrics.train_mse);
    metrics.val_mse_db = mse_db(metrics.val_mse);
    return metrics;
}

} // namespace crbf
