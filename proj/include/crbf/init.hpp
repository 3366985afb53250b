#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "crbf/linalg.hpp"
#include "crbf/network.hpp"
#include "crbf/rng.hpp"

namespace crbf {

enum class InitScheme { Proposed, Random, KMeans, Constellation };

inline const char* to_string(InitScheme s) {
    switch (s) {
    case InitScheme::Proposed: return "proposed";
    case InitScheme::Random: return "random";
    case InitScheme::KMeans: return "kmeans";
    case InitScheme::Constellation: return "constellation";
    }
    return "?";
}

inline InitScheme init_scheme_from_string(const std::string& s) {
    if (s == "proposed") return InitScheme::Proposed;
    if (s == "random") return InitScheme::Random;
    if (s == "kmeans") return InitScheme::KMeans;
    if (s == "constellation") return InitScheme::Constellation;
    throw std::invalid_argument("unknown init scheme: " + s);
}

struct InitConfig {
    InitScheme scheme = InitScheme::Proposed;
    double c_sigma = 1.0;
    std::vector<double> mu_v;          // per layer; empty means all 1
    double random_center_variance = 1.0;
    std::size_t kmeans_max_iters = 100;

    double mu_v_at(std::size_t layer) const {
        if (mu_v.empty()) return 1.0;
        if (layer >= mu_v.size())
            throw std::invalid_argument("InitConfig: mu_v missing for layer");
        return mu_v[layer];
    }

    void validate(std::size_t depth) const {
        if (!(c_sigma > 0.0))
            throw std::invalid_argument("InitConfig: c_sigma must be > 0");
        if (!mu_v.empty() && mu_v.size() < depth)
            throw std::invalid_argument("InitConfig: mu_v shorter than layer count");
        for (double m : mu_v)
            if (!(m > 0.0))
                throw std::invalid_argument("InitConfig: mu_v must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Dataset normalization

namespace detail {

inline ComponentStats flat_component_stats(const std::vector<ComplexVector>& data) {
    if (data.empty() || data.front().empty())
        throw std::invalid_argument("normalize: empty dataset");
    ComplexMatrix flat(data.size(), data.front().size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].size() != flat.cols())
            throw std::invalid_argument("normalize: ragged dataset");
        std::copy(data[i].begin(), data[i].end(), flat.row(i));
    }
    return component_stats(flat);
}

inline NormStats make_norm_stats(const std::vector<ComplexVector>& data, std::size_t dim,
                                 double c_sigma, double mu_v) {
    if (data.empty())
        throw std::invalid_argument("normalize: empty dataset");
    if (data.front().size() != dim)
        throw std::invalid_argument("normalize: dimension mismatch");
    const ComponentStats cs = flat_component_stats(data);
    const double total = cs.var_re + cs.var_im;
    if (total <= 0.0)
        throw std::invalid_argument("normalize: zero-variance dataset");

    NormStats stats;
    stats.scale = std::sqrt(c_sigma * mu_v / (2.0 * static_cast<double>(dim)));
    // symmetric when the per-component variances agree within 10%
    const bool symmetric = cs.var_im > 0.0 && cs.var_re > 0.0 &&
                           cs.var_re / cs.var_im >= 0.9 && cs.var_re / cs.var_im <= 1.1;
    if (symmetric) {
        stats.mode = NormStats::Mode::Symmetric;
        stats.mean = cplx{cs.mean_re, cs.mean_im};
        stats.variance = total;
    } else {
        if (cs.var_re <= 0.0)
            throw std::invalid_argument("normalize: zero variance on real component");
        if (cs.var_im <= 0.0)
            throw std::invalid_argument("normalize: zero variance on imaginary component");
        stats.mode = NormStats::Mode::Asymmetric;
        stats.mean_re = cs.mean_re;
        stats.mean_im = cs.mean_im;
        stats.var_re = cs.var_re;
        stats.var_im = cs.var_im;
    }
    return stats;
}

} // namespace detail

/// Normalizes an input dataset to zero mean and total variance
/// c_sigma * mu_v1 / (2P); falls back to per-component normalization
/// when real and imaginary variances disagree by more than 10%.
inline std::pair<std::vector<ComplexVector>, NormStats>
normalize_input(const std::vector<ComplexVector>& x, std::size_t P, double c_sigma = 1.0,
                double mu_v1 = 1.0) {
    NormStats stats = detail::make_norm_stats(x, P, c_sigma, mu_v1);
    std::vector<ComplexVector> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = normalize_vector(x[i], stats);
    return {std::move(out), stats};
}

/// Same formula with R replacing P and mu_v of the last layer.
inline std::pair<std::vector<ComplexVector>, NormStats>
normalize_output(const std::vector<ComplexVector>& d, std::size_t R, double c_sigma = 1.0,
                 double mu_vL = 1.0) {
    NormStats stats = detail::make_norm_stats(d, R, c_sigma, mu_vL);
    std::vector<ComplexVector> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = normalize_vector(d[i], stats);
    return {std::move(out), stats};
}

inline ComplexVector denormalize_output(const ComplexVector& y, const NormStats& stats) {
    return denormalize_vector(y, stats);
}

// ---------------------------------------------------------------------------
// Initialization schemes

/// Center variance target for layer l under the proposed scheme:
/// c_sigma * mu_v^{l} / (2 O^{l-1}), with O^{0} = P.
inline double proposed_center_variance(const Network& net, std::size_t layer,
                                       const InitConfig& cfg) {
    const double fan_in = static_cast<double>(net.layers[layer].fan_in());
    return cfg.c_sigma * cfg.mu_v_at(layer) / (2.0 * fan_in);
}

/// Synaptic-weight variance target for layer l: the layer-output
/// variance target divided by (12/5) (sigma_Gamma^2 / (c_sigma
/// exp(mu_v)))^2 I^{l} O^{l-1}. The last layer targets the normalized
/// output dataset variance c_sigma mu_v^{L} / 2R.
inline double proposed_weight_variance(const Network& net, std::size_t layer,
                                       const InitConfig& cfg) {
    const Layer& l = net.layers[layer];
    const double mu_v = cfg.mu_v_at(layer);
    const double var_gamma = proposed_center_variance(net, layer, cfg);
    const double ratio = var_gamma / (cfg.c_sigma * std::exp(mu_v));
    const double denom = (12.0 / 5.0) * ratio * ratio *
                         static_cast<double>(l.neurons()) *
                         static_cast<double>(l.fan_in());
    const bool last = layer + 1 == net.depth();
    const double target =
        last ? cfg.c_sigma * mu_v / (2.0 * static_cast<double>(net.R))
             : cfg.c_sigma * cfg.mu_v_at(layer + 1) / (2.0 * static_cast<double>(l.outputs()));
    return target / denom;
}

/// Proposed variance-matched initialization: b = 0, sigma = c_sigma,
/// centers and weights sampled circular complex Gaussian with the
/// variance targets above.
inline void init_proposed(Network& net, const InitConfig& cfg, RngStream& rng) {
    cfg.validate(net.depth());
    for (std::size_t l = 0; l < net.depth(); ++l) {
        Layer& layer = net.layers[l];
        layer.Gamma = cg_sample(layer.Gamma.rows(), layer.Gamma.cols(),
                                proposed_center_variance(net, l, cfg), rng);
        layer.W = cg_sample(layer.W.rows(), layer.W.cols(),
                            proposed_weight_variance(net, l, cfg), rng);
        std::fill(layer.b.begin(), layer.b.end(), cplx{0.0, 0.0});
        std::fill(layer.sigma.begin(), layer.sigma.end(), cfg.c_sigma);
        layer.cache_valid = false;
    }
}

/// Random baseline: centers CG(0, sigma_Gamma^2) (default 1), weights
/// CG(0, 1), b = 0, sigma = 1. Unspecified parts mirror the proposed
/// scheme so only the studied component differs.
inline void init_random(Network& net, const InitConfig& cfg, RngStream& rng) {
    for (auto& layer : net.layers) {
        layer.Gamma = cg_sample(layer.Gamma.rows(), layer.Gamma.cols(),
                                cfg.random_center_variance, rng);
        layer.W = cg_sample(layer.W.rows(), layer.W.cols(), 1.0, rng);
        std::fill(layer.b.begin(), layer.b.end(), cplx{0.0, 0.0});
        std::fill(layer.sigma.begin(), layer.sigma.end(), 1.0);
        layer.cache_valid = false;
    }
}

struct KMeansResult {
    std::vector<ComplexVector> centroids;
    std::size_t iterations = 0;
    std::vector<double> wcss_history; // within-cluster sum of squares per iteration
};

/// Lloyd's algorithm with k-means++ seeding on complex vectors
/// (entries treated as paired real coordinates through the complex
/// squared distance). Stops at centroid movement < 1e-8 or max_iters.
inline KMeansResult kmeans_centers(const std::vector<ComplexVector>& points, std::size_t k,
                                   std::size_t max_iters, RngStream& rng) {
    if (points.size() < k)
        throw std::invalid_argument("kmeans_centers: fewer points than clusters");
    const std::size_t n = points.size();

    KMeansResult result;
    result.centroids.reserve(k);
    // k-means++ seeding
    result.centroids.push_back(points[rng.uniform_below(n)]);
    std::vector<double> d2(n);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_distance(points[i], result.centroids[0]);
            for (std::size_t j = 1; j < result.centroids.size(); ++j)
                best = std::min(best, sq_distance(points[i], result.centroids[j]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            result.centroids.push_back(points[rng.uniform_below(n)]);
            continue;
        }
        double target = rng.uniform01() * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        result.centroids.push_back(points[pick]);
    }

    std::vector<std::size_t> assign(n, 0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_distance(points[i], result.centroids[0]);
            std::size_t arg = 0;
            for (std::size_t j = 1; j < k; ++j) {
                const double d = sq_distance(points[i], result.centroids[j]);
                if (d < best) {
                    best = d;
                    arg = j;
                }
            }
            assign[i] = arg;
            wcss += best;
        }
        result.wcss_history.push_back(wcss);
        result.iterations = iter + 1;

        std::vector<ComplexVector> sums(k, ComplexVector(points.front().size(), cplx{0, 0}));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < points[i].size(); ++p)
                sums[assign[i]][p] += points[i][p];
            ++counts[assign[i]];
        }
        double movement = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) continue; // empty cluster keeps its centroid
            for (std::size_t p = 0; p < sums[j].size(); ++p) {
                const cplx next = sums[j][p] / static_cast<double>(counts[j]);
                movement = std::max(movement, std::abs(next - result.centroids[j][p]));
                result.centroids[j][p] = next;
            }
        }
        if (movement < 1e-8) break;
    }
    return result;
}

/// K-means center initialization for the shallow network: centers from
/// Lloyd's algorithm on the normalized inputs, rest as init_random.
inline void init_kmeans(Network& net, const InitConfig& cfg,
                        const std::vector<ComplexVector>& normalized_inputs,
                        RngStream& rng) {
    if (net.depth() != 1)
        throw std::invalid_argument("init_kmeans: only supported for single-layer networks");
    init_random(net, cfg, rng);
    Layer& layer = net.layers[0];
    const KMeansResult km =
        kmeans_centers(normalized_inputs, layer.neurons(), cfg.kmeans_max_iters, rng);
    for (std::size_t m = 0; m < layer.neurons(); ++m)
        std::copy(km.centroids[m].begin(), km.centroids[m].end(), layer.Gamma.row(m));
    layer.cache_valid = false;
}

/// Constellation-based baseline: first-layer center entries drawn
/// uniformly from the modulation alphabet, then affinely matched to
/// the normalized-input statistics (zero mean, variance
/// c_sigma mu_v1 / 2P). Deeper layers fall back to the proposed center
/// formula; W, b, sigma as in init_random.
inline void init_constellation(Network& net, const InitConfig& cfg,
                               const ComplexVector& alphabet, RngStream& rng) {
    if (alphabet.empty())
        throw std::invalid_argument("init_constellation: empty alphabet");
    init_random(net, cfg, rng);

    cplx mu{0.0, 0.0};
    for (const auto& a : alphabet) mu += a;
    mu /= static_cast<double>(alphabet.size());
    double var = 0.0;
    for (const auto& a : alphabet) var += std::norm(a - mu);
    var /= static_cast<double>(alphabet.size());

    Layer& first = net.layers[0];
    const double target = proposed_center_variance(net, 0, cfg);
    const double scale = var > 0.0 ? std::sqrt(target / var) : 0.0;
    for (auto& z : first.Gamma.data()) {
        const cplx pick = alphabet[rng.uniform_below(alphabet.size())];
        z = (pick - mu) * scale;
    }
    for (std::size_t l = 1; l < net.depth(); ++l) {
        Layer& layer = net.layers[l];
        layer.Gamma = cg_sample(layer.Gamma.rows(), layer.Gamma.cols(),
                                proposed_center_variance(net, l, cfg), rng);
    }
}

/// Initializes a network with any scheme; K-means and the
/// constellation baseline additionally need the normalized input
/// dataset / alphabet.
inline void initialize_network(Network& net, const InitConfig& cfg, RngStream& rng,
                               const std::vector<ComplexVector>* normalized_inputs = nullptr,
                               const ComplexVector* alphabet = nullptr) {
    switch (cfg.scheme) {
    case InitScheme::Proposed:
        init_proposed(net, cfg, rng);
        return;
    case InitScheme::Random:
        init_random(net, cfg, rng);
        return;
    case InitScheme::KMeans:
        if (!normalized_inputs)
            throw std::invalid_argument("initialize_network: kmeans needs input data");
        init_kmeans(net, cfg, *normalized_inputs, rng);
        return;
    case InitScheme::Constellation:
        if (!alphabet)
            throw std::invalid_argument("initialize_network: constellation needs alphabet");
        init_constellation(net, cfg, *alphabet, rng);
        return;
    }
    throw std::invalid_argument("initialize_network: bad scheme");
}

// ---------------------------------------------------------------------------
// Monte-Carlo verification of the proposed scheme's operating point

struct InitStatsReport {
    double mean_v1 = 0.0;        // measured mean kernel input, first layer
    double mean_v1_target = 0.0; // mu_v^{1}
    bool mean_v1_ok = false;
    double var_yL = 0.0;         // measured output variance
    double var_yL_target = 0.0;  // c_sigma mu_v^{L} / 2R
    bool var_yL_ok = false;
};

/// Empirically checks the two design targets of the proposed scheme on
/// a normalized probe dataset: the mean first-layer kernel input and
/// the network-output variance.
inline InitStatsReport verify_init_statistics(Network& net,
                                              const std::vector<ComplexVector>& probe,
                                              const InitConfig& cfg,
                                              double v1_rel_tol = 0.1,
                                              double yL_rel_tol = 0.3) {
    if (probe.empty())
        throw std::invalid_argument("verify_init_statistics: empty probe");
    InitStatsReport report;
    report.mean_v1_target = cfg.mu_v_at(0);
    report.var_yL_target =
        cfg.c_sigma * cfg.mu_v_at(net.depth() - 1) / (2.0 * static_cast<double>(net.R));

    ComplexMatrix outputs(probe.size(), net.R);
    double v_acc = 0.0;
    std::size_t v_count = 0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const ComplexVector& y = network_forward(net, probe[i]);
        std::copy(y.begin(), y.end(), outputs.row(i));
        for (double v : net.layers[0].v) v_acc += v;
        v_count += net.layers[0].v.size();
    }
    report.mean_v1 = v_acc / static_cast<double>(v_count);
    // variance of each output entry about its own mean over the probe,
    // pooled across outputs
    double var_acc = 0.0;
    for (std::size_t r = 0; r < net.R; ++r) {
        cplx mu{0.0, 0.0};
        for (std::size_t i = 0; i < probe.size(); ++i) mu += outputs(i, r);
        mu /= static_cast<double>(probe.size());
        for (std::size_t i = 0; i < probe.size(); ++i)
            var_acc += std::norm(outputs(i, r) - mu);
    }
    report.var_yL = var_acc / static_cast<double>(probe.size() * net.R);
    report.mean_v1_ok =
        std::abs(report.mean_v1 - report.mean_v1_target) <= v1_rel_tol * report.mean_v1_target;
    report.var_yL_ok =
        std::abs(report.var_yL - report.var_yL_target) <= yL_rel_tol * report.var_yL_target;
    return report;
}

} // namespace crbf
