#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crbf/channel.hpp"
#include "crbf/init.hpp"
#include "crbf/network.hpp"
#include "crbf/training.hpp"

namespace crbf {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::size_t P = 16;
    std::size_t R = 4;
    std::vector<std::size_t> architecture = {64};
    InitScheme scheme = InitScheme::Proposed;
    std::vector<LayerRates> rates; // empty -> per-scheme defaults
    double ebn0_db = 26.0;
    std::size_t epochs = 1000;
    std::size_t seeds = 20;
    std::size_t train_samples = 3840;
    std::size_t val_samples = 1280;
    std::uint64_t master_seed = 1;
    bool shuffle = true;
    double c_sigma = 1.0;
    std::vector<double> mu_v; // empty -> 1 for all layers
    std::string out_dir = ".";

    /// Shrinks to CI-friendly sizes: 500 epochs, 10 seeds.
    void apply_desk_scale() {
        epochs = std::min<std::size_t>(epochs, 500);
        seeds = std::min<std::size_t>(seeds, 10);
    }

    void validate() const {
        if (architecture.empty())
            throw ConfigError("config: architecture must be nonempty");
        if (seeds == 0)
            throw ConfigError("config: seeds must be >= 1");
        if (epochs == 0)
            throw ConfigError("config: epochs must be >= 1");
        if (train_samples == 0 || val_samples == 0)
            throw ConfigError("config: dataset sizes must be >= 1");
        if (P % 4 != 0 || P / 4 == 0)
            throw ConfigError("config: P must be a positive multiple of 4 (stacked rx slots)");
        if (!rates.empty() && rates.size() != architecture.size())
            throw ConfigError("config: rates must list one quadruple per layer");
        for (const auto& r : rates) {
            for (double v : {r.eta_w, r.eta_b, r.eta_gamma, r.eta_sigma})
                if (!(v > 0.0) || !std::isfinite(v))
                    throw ConfigError("config: learning rates must be finite and positive");
        }
        if (!(c_sigma > 0.0))
            throw ConfigError("config: c_sigma must be > 0");
    }
};

/// Empirically optimized step sizes: one quadruple per scheme for the
/// shallow network, per-layer quadruples for deep networks.
inline std::vector<LayerRates> default_rates(InitScheme scheme, std::size_t depth) {
    if (depth == 1) {
        if (scheme == InitScheme::Proposed || scheme == InitScheme::KMeans)
            return {{0.1, 0.1, 0.4, 0.2}};
        return {{0.5, 0.5, 0.5, 0.5}};
    }
    static constexpr double per_layer[4] = {0.100, 0.050, 0.033, 0.025};
    if (depth > 4)
        throw ConfigError("default_rates: no tabulated rates beyond four layers");
    std::vector<LayerRates> rates;
    for (std::size_t l = 0; l < depth; ++l)
        rates.push_back({per_layer[l], per_layer[l], per_layer[l], per_layer[l]});
    return rates;
}

inline std::vector<LayerRates> effective_rates(const ExperimentConfig& cfg) {
    return cfg.rates.empty() ? default_rates(cfg.scheme, cfg.architecture.size()) : cfg.rates;
}

// ---------------------------------------------------------------------------
// Config file parsing (JSON; an empty file means all defaults)

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    static const std::vector<std::string> known = {
        "name",          "architecture", "scheme",  "rates",   "ebn0_db",
        "epochs",        "seeds",        "train_samples", "val_samples",
        "seed",          "shuffle",      "c_sigma", "mu_v",    "out_dir",
        "inputs",        "outputs"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config: unknown key '" + key + "'");
    }
    try {
        if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
        if (j.contains("inputs")) cfg.P = j.at("inputs").get<std::size_t>();
        if (j.contains("outputs")) cfg.R = j.at("outputs").get<std::size_t>();
        if (j.contains("architecture"))
            cfg.architecture = j.at("architecture").get<std::vector<std::size_t>>();
        if (j.contains("scheme"))
            cfg.scheme = init_scheme_from_string(j.at("scheme").get<std::string>());
        if (j.contains("rates")) {
            cfg.rates.clear();
            for (const auto& row : j.at("rates")) {
                const auto q = row.get<std::vector<double>>();
                if (q.size() != 4)
                    throw ConfigError("config: each rates row needs 4 entries "
                                      "(eta_w, eta_b, eta_gamma, eta_sigma)");
                cfg.rates.push_back({q[0], q[1], q[2], q[3]});
            }
        }
        if (j.contains("ebn0_db")) cfg.ebn0_db = j.at("ebn0_db").get<double>();
        if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::size_t>();
        if (j.contains("train_samples"))
            cfg.train_samples = j.at("train_samples").get<std::size_t>();
        if (j.contains("val_samples")) cfg.val_samples = j.at("val_samples").get<std::size_t>();
        if (j.contains("seed")) cfg.master_seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("shuffle")) cfg.shuffle = j.at("shuffle").get<bool>();
        if (j.contains("c_sigma")) cfg.c_sigma = j.at("c_sigma").get<double>();
        if (j.contains("mu_v")) cfg.mu_v = j.at("mu_v").get<std::vector<double>>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
    nlohmann::json j = nlohmann::json::object();
    if (!blank) {
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError(std::string("config: ") + ex.what());
        }
    }
    return config_from_json(j);
}

/// Built-in experiment presets: four shallow initialization-comparison
/// runs and three deep architectures.
inline std::vector<std::pair<std::string, ExperimentConfig>> builtin_presets() {
    std::vector<std::pair<std::string, ExperimentConfig>> presets;
    auto shallow = [](InitScheme s) {
        ExperimentConfig c;
        c.architecture = {64};
        c.scheme = s;
        c.rates = default_rates(s, 1);
        c.name = std::string("fig1-") + to_string(s);
        return c;
    };
    presets.emplace_back("fig1-proposed", shallow(InitScheme::Proposed));
    presets.emplace_back("fig1-random", shallow(InitScheme::Random));
    presets.emplace_back("fig1-kmeans", shallow(InitScheme::KMeans));
    presets.emplace_back("fig1-constellation", shallow(InitScheme::Constellation));
    auto deep = [](std::vector<std::size_t> arch, const std::string& name) {
        ExperimentConfig c;
        c.architecture = std::move(arch);
        c.scheme = InitScheme::Proposed;
        c.rates = default_rates(InitScheme::Proposed, c.architecture.size());
        c.name = name;
        return c;
    };
    presets.emplace_back("fig2-2layer", deep({48, 16}, "fig2-2layer"));
    presets.emplace_back("fig2-3layer", deep({24, 24, 16}, "fig2-3layer"));
    presets.emplace_back("fig2-4layer", deep({16, 16, 16, 16}, "fig2-4layer"));
    return presets;
}

inline ExperimentConfig preset_config(const std::string& name) {
    for (auto& [n, c] : builtin_presets())
        if (n == name) return c;
    throw ConfigError("unknown preset: " + name);
}

// ---------------------------------------------------------------------------
// Grid runner

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return detail::splitmix64(detail::splitmix64(detail::splitmix64(master) + a) + b);
}

struct SeedCurve {
    std::vector<double> train_mse; // linear
    std::vector<double> val_mse;
    bool diverged = false;
    std::string divergence_info;
};

struct ConvergenceRecord {
    std::size_t epochs = 0;
    std::vector<SeedCurve> seeds;
    std::vector<double> mean_train_db;
    std::vector<double> mean_val_db;

    std::size_t converged_seed_count() const {
        std::size_t n = 0;
        for (const auto& s : seeds)
            if (!s.diverged) ++n;
        return n;
    }
};

struct SeedRun {
    SeedCurve curve;
    Network net;
};

/// One (config, seed) cell: fresh channel, dataset, initialization and
/// full training run, all driven by sub-streams of (master seed, seed
/// index) so cells are independent and order-insensitive.
inline SeedRun run_seed(const ExperimentConfig& cfg, std::size_t seed_index) {
    const auto rates = effective_rates(cfg);

    RngStream data_rng(derive_seed(cfg.master_seed, seed_index, 0));
    const std::size_t n_rx = cfg.P / 4;
    const ChannelRealization channel = rayleigh_mimo(cfg.R, n_rx, data_rng, seed_index);
    const SupervisedDataset train_raw =
        generate_dataset(cfg.train_samples, cfg.ebn0_db, channel, data_rng);
    const SupervisedDataset val_raw =
        generate_dataset(cfg.val_samples, cfg.ebn0_db, channel, data_rng);

    auto [train_in, in_stats] =
        normalize_input(train_raw.inputs, cfg.P, cfg.c_sigma,
                        cfg.mu_v.empty() ? 1.0 : cfg.mu_v.front());
    auto [train_tgt, out_stats] =
        normalize_output(train_raw.targets, cfg.R, cfg.c_sigma,
                         cfg.mu_v.empty() ? 1.0 : cfg.mu_v.back());

    SeedRun run;
    run.net = make_network(cfg.P, cfg.architecture, cfg.R);
    run.net.input_norm = in_stats;
    run.net.output_norm = out_stats;

    InitConfig init_cfg;
    init_cfg.scheme = cfg.scheme;
    init_cfg.c_sigma = cfg.c_sigma;
    init_cfg.mu_v = cfg.mu_v;
    RngStream init_rng(derive_seed(cfg.master_seed, seed_index, 1));
    const Constellation qam = Constellation::qam16();
    initialize_network(run.net, init_cfg, init_rng, &train_in, &qam.symbols);

    NormalizedDataset train{std::move(train_in), std::move(train_tgt), train_raw.targets};
    NormalizedDataset val;
    val.inputs.reserve(val_raw.size());
    val.targets.reserve(val_raw.size());
    for (std::size_t i = 0; i < val_raw.size(); ++i) {
        val.inputs.push_back(normalize_vector(val_raw.inputs[i], in_stats));
        val.targets.push_back(normalize_vector(val_raw.targets[i], out_stats));
    }
    val.targets_raw = val_raw.targets;

    RngStream shuffle_rng(derive_seed(cfg.master_seed, seed_index, 2));
    BackwardState state;
    state.resize(run.net);
    run.curve.train_mse.reserve(cfg.epochs);
    run.curve.val_mse.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        try {
            const EpochMetrics m =
                train_epoch(run.net, train, val, rates, cfg.shuffle, shuffle_rng, state, epoch);
            run.curve.train_mse.push_back(m.train_mse);
            run.curve.val_mse.push_back(m.val_mse);
        } catch (const std::runtime_error& ex) {
            run.curve.diverged = true;
            run.curve.divergence_info = ex.what();
            break;
        }
    }
    return run;
}

/// Runs all seeds (optionally on parallel workers; the merge is by
/// seed index, so worker count never changes the result) and averages
/// linear MSE across non-diverged seeds before converting to dB.
inline ConvergenceRecord run_grid(const ExperimentConfig& cfg, std::size_t jobs = 1,
                                  Network* first_seed_net = nullptr) {
    cfg.validate();
    ConvergenceRecord record;
    record.epochs = cfg.epochs;
    record.seeds.resize(cfg.seeds);

    std::vector<Network> nets(first_seed_net ? 1 : 0);
    if (jobs <= 1) {
        for (std::size_t s = 0; s < cfg.seeds; ++s) {
            SeedRun run = run_seed(cfg, s);
            record.seeds[s] = std::move(run.curve);
            if (s == 0 && first_seed_net) *first_seed_net = std::move(run.net);
        }
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t s = w; s < cfg.seeds; s += jobs) {
                        SeedRun run = run_seed(cfg, s);
                        record.seeds[s] = std::move(run.curve);
                        if (s == 0 && first_seed_net) *first_seed_net = std::move(run.net);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    record.mean_train_db.assign(cfg.epochs, std::numeric_limits<double>::quiet_NaN());
    record.mean_val_db.assign(cfg.epochs, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        double tr = 0.0, va = 0.0;
        std::size_t n = 0;
        for (const auto& s : record.seeds) {
            if (s.diverged || e >= s.train_mse.size()) continue;
            tr += s.train_mse[e];
            va += s.val_mse[e];
            ++n;
        }
        if (n > 0) {
            record.mean_train_db[e] = mse_db(tr / static_cast<double>(n));
            record.mean_val_db[e] = mse_db(va / static_cast<double>(n));
        }
    }
    return record;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

inline std::string format_db(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Columns: epoch, mean train/val MSE in dB, then per-seed train/val
/// columns. Epochs past a seed's divergence point render as "nan".
inline void emit_csv(const ConvergenceRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("emit_csv: cannot open " + path);
    out << "epoch,mean_train_mse_db,mean_val_mse_db";
    for (std::size_t s = 0; s < record.seeds.size(); ++s)
        out << ",seed" << s << "_train_mse_db,seed" << s << "_val_mse_db";
    out << "\n";
    for (std::size_t e = 0; e < record.epochs; ++e) {
        out << e << "," << detail::format_db(record.mean_train_db[e]) << ","
            << detail::format_db(record.mean_val_db[e]);
        for (const auto& seed : record.seeds) {
            if (e < seed.train_mse.size())
                out << "," << detail::format_db(mse_db(seed.train_mse[e])) << ","
                    << detail::format_db(mse_db(seed.val_mse[e]));
            else
                out << ",nan,nan";
        }
        out << "\n";
    }
    if (!out)
        throw std::runtime_error("emit_csv: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json complex_to_json(const cplx& z) {
    return nlohmann::json::array({z.real(), z.imag()});
}

inline cplx complex_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline nlohmann::json cvec_to_json(const ComplexVector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& z : v) a.push_back(complex_to_json(z));
    return a;
}

inline ComplexVector cvec_from_json(const nlohmann::json& j) {
    ComplexVector v;
    for (const auto& e : j) v.push_back(complex_from_json(e));
    return v;
}

inline nlohmann::json norm_to_json(const NormStats& s) {
    return {{"mode", s.mode == NormStats::Mode::Symmetric ? "symmetric" : "asymmetric"},
            {"mean", complex_to_json(s.mean)},
            {"variance", s.variance},
            {"mean_re", s.mean_re},
            {"mean_im", s.mean_im},
            {"var_re", s.var_re},
            {"var_im", s.var_im},
            {"scale", s.scale}};
}

inline NormStats norm_from_json(const nlohmann::json& j) {
    NormStats s;
    s.mode = j.at("mode").get<std::string>() == "symmetric" ? NormStats::Mode::Symmetric
                                                            : NormStats::Mode::Asymmetric;
    s.mean = complex_from_json(j.at("mean"));
    s.variance = j.at("variance").get<double>();
    s.mean_re = j.at("mean_re").get<double>();
    s.mean_im = j.at("mean_im").get<double>();
    s.var_re = j.at("var_re").get<double>();
    s.var_im = j.at("var_im").get<double>();
    s.scale = j.at("scale").get<double>();
    return s;
}

} // namespace detail

inline void save_checkpoint(const Network& net, const std::string& path,
                            const std::string& config_note = "") {
    nlohmann::json j;
    j["format"] = "crbf-checkpoint";
    j["version"] = kCheckpointVersion;
    j["inputs"] = net.P;
    j["outputs"] = net.R;
    j["config"] = config_note;
    j["input_norm"] = detail::norm_to_json(net.input_norm);
    j["output_norm"] = detail::norm_to_json(net.output_norm);
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json lj;
        lj["neurons"] = layer.neurons();
        lj["fan_in"] = layer.fan_in();
        lj["outputs"] = layer.outputs();
        lj["W"] = detail::cvec_to_json(layer.W.data());
        lj["b"] = detail::cvec_to_json(layer.b);
        lj["Gamma"] = detail::cvec_to_json(layer.Gamma.data());
        lj["sigma"] = layer.sigma;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << j.dump(1) << "\n";
    if (!out)
        throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline Network load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error("load_checkpoint: corrupt file " + path + ": " + ex.what());
    }
    if (!j.contains("format") || j.at("format") != "crbf-checkpoint")
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    if (!j.contains("version") || j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported checkpoint version in " + path);

    Network net;
    net.P = j.at("inputs").get<std::size_t>();
    net.R = j.at("outputs").get<std::size_t>();
    net.input_norm = detail::norm_from_json(j.at("input_norm"));
    net.output_norm = detail::norm_from_json(j.at("output_norm"));
    for (const auto& lj : j.at("layers")) {
        const auto neurons = lj.at("neurons").get<std::size_t>();
        const auto fan_in = lj.at("fan_in").get<std::size_t>();
        const auto outputs = lj.at("outputs").get<std::size_t>();
        Layer layer(neurons, fan_in, outputs);
        const ComplexVector w = detail::cvec_from_json(lj.at("W"));
        const ComplexVector g = detail::cvec_from_json(lj.at("Gamma"));
        if (w.size() != layer.W.size() || g.size() != layer.Gamma.size())
            throw std::runtime_error("load_checkpoint: parameter shape mismatch in " + path);
        std::copy(w.begin(), w.end(), layer.W.data().begin());
        std::copy(g.begin(), g.end(), layer.Gamma.data().begin());
        layer.b = detail::cvec_from_json(lj.at("b"));
        layer.sigma = lj.at("sigma").get<RealVector>();
        net.layers.push_back(std::move(layer));
    }
    net.check_shapes();
    return net;
}

} // namespace crbf
