// Experiment front-end: runs initialization-comparison grids, verifies
// gradients and initialization statistics, exports datasets, and
// inspects saved model checkpoints.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crbf/channel.hpp"
#include "crbf/experiment.hpp"
#include "crbf/init.hpp"
#include "crbf/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitAllDiverged = 2;
constexpr int kExitIoError = 3;

int cmd_run(const std::string& config_path, const std::string& preset,
            std::uint64_t seed, bool seed_set, const std::string& out_dir,
            bool desk_scale, std::size_t jobs, bool save_model) {
    crbf::ExperimentConfig cfg;
    try {
        if (!preset.empty())
            cfg = crbf::preset_config(preset);
        else if (!config_path.empty())
            cfg = crbf::parse_config(config_path);
        if (seed_set) cfg.master_seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (desk_scale) cfg.apply_desk_scale();
        cfg.validate();
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitConfigError;
    }

    std::cout << "running " << cfg.name << ": arch [";
    for (std::size_t i = 0; i < cfg.architecture.size(); ++i)
        std::cout << (i ? "," : "") << cfg.architecture[i];
    std::cout << "], scheme " << crbf::to_string(cfg.scheme) << ", " << cfg.epochs
              << " epochs, " << cfg.seeds << " seeds, Eb/N0 " << cfg.ebn0_db << " dB\n";

    try {
        crbf::Network first_net;
        const crbf::ConvergenceRecord record =
            crbf::run_grid(cfg, jobs, save_model ? &first_net : nullptr);

        std::filesystem::create_directories(cfg.out_dir);
        const std::string csv_path = cfg.out_dir + "/" + cfg.name + "_curves.csv";
        crbf::emit_csv(record, csv_path);
        std::cout << "wrote " << csv_path << "\n";
        if (save_model) {
            const std::string model_path = cfg.out_dir + "/" + cfg.name + "_model.json";
            crbf::save_checkpoint(first_net, model_path, cfg.name);
            std::cout << "wrote " << model_path << "\n";
        }

        const std::size_t ok = record.converged_seed_count();
        for (std::size_t s = 0; s < record.seeds.size(); ++s)
            if (record.seeds[s].diverged)
                std::cout << "seed " << s << " diverged: "
                          << record.seeds[s].divergence_info << "\n";
        if (ok == 0) {
            std::cerr << "error: all seeds diverged\n";
            return kExitAllDiverged;
        }
        const double final_val = record.mean_val_db.back();
        std::printf("final mean validation MSE: %.2f dB (%zu/%zu seeds converged)\n",
                    final_val, ok, record.seeds.size());
    } catch (const std::filesystem::filesystem_error& ex) {
        std::cerr << "I/O error: " << ex.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitIoError;
    }
    return kExitOk;
}

int cmd_verify(std::uint64_t seed) {
    using namespace crbf;
    bool all_ok = true;

    // gradient check on a small deep network
    {
        RngStream rng(seed);
        Network net = make_network(3, {4, 2}, 2);
        InitConfig icfg;
        init_proposed(net, icfg, rng);
        ComplexVector x(3), d(2);
        for (auto& z : x) z = rng.complex_gaussian(1.0 / 6.0);
        for (auto& z : d) z = rng.complex_gaussian(0.25);

        network_forward(net, x);
        BackwardState state;
        compute_backward_state(net, d, state);

        std::size_t checked = 0, failed = 0;
        double worst = 0.0;
        for (std::size_t l = 0; l < net.depth(); ++l) {
            const Layer& layer = net.layers[l];
            for (ParamKind kind : {ParamKind::Weight, ParamKind::Bias, ParamKind::Center,
                                   ParamKind::Variance}) {
                std::size_t count = kind == ParamKind::Weight   ? layer.W.size()
                                    : kind == ParamKind::Bias   ? layer.b.size()
                                    : kind == ParamKind::Center ? layer.Gamma.size()
                                                                : layer.sigma.size();
                for (std::size_t i = 0; i < count; ++i) {
                    for (bool imag : {false, true}) {
                        if (kind == ParamKind::Variance && imag) continue;
                        ParamCoord c{l, kind, i, imag};
                        const double analytic = analytic_gradient(net, state, c);
                        const double fd = fd_gradient(net, x, d, c);
                        network_forward(net, x); // restore caches
                        ++checked;
                        // near-zero gradients carry finite-difference noise;
                        // hold them to an absolute bound instead
                        if (std::abs(fd) < 1e-6) {
                            const double err = std::abs(analytic - fd);
                            worst = std::max(worst, err);
                            if (err > 1e-9) ++failed;
                        } else {
                            const double err = std::abs(analytic - fd) / std::abs(fd);
                            worst = std::max(worst, err);
                            if (err > 1e-6) ++failed;
                        }
                    }
                }
            }
        }
        std::printf("[%s] gradient check: %zu coordinates, worst error %.2e\n",
                    failed == 0 ? "PASS" : "FAIL", checked, worst);
        all_ok = all_ok && failed == 0;
    }

    // initialization statistics on the experiment shape
    {
        RngStream rng(seed + 1);
        Network net = make_network(16, {64}, 4);
        InitConfig icfg;
        init_proposed(net, icfg, rng);
        std::vector<ComplexVector> probe(10000, ComplexVector(16));
        for (auto& row : probe)
            for (auto& z : row) z = rng.complex_gaussian(1.0 / 32.0);
        const InitStatsReport report = verify_init_statistics(net, probe, icfg);
        std::printf("[%s] mean v1 = %.4f (target %.4f +/- 10%%)\n",
                    report.mean_v1_ok ? "PASS" : "FAIL", report.mean_v1,
                    report.mean_v1_target);
        std::printf("[%s] var y^L = %.4f (target %.4f +/- 30%%)\n",
                    report.var_yL_ok ? "PASS" : "FAIL", report.var_yL,
                    report.var_yL_target);
        all_ok = all_ok && report.mean_v1_ok && report.var_yL_ok;
    }
    return all_ok ? kExitOk : kExitConfigError;
}

int cmd_gen_data(std::size_t samples, double ebn0, std::uint64_t seed,
                 const std::string& out) {
    try {
        crbf::RngStream rng(seed);
        const crbf::ChannelRealization channel = crbf::rayleigh_mimo(4, 4, rng, seed);
        const crbf::SupervisedDataset ds =
            crbf::generate_dataset(samples, ebn0, channel, rng, seed);
        crbf::export_dataset_csv(ds, out);
        std::cout << "wrote " << out << " (" << ds.size() << " samples)\n";
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitIoError;
    }
    return kExitOk;
}

int cmd_inspect(const std::string& path) {
    try {
        crbf::Network net = crbf::load_checkpoint(path);
        std::cout << "checkpoint: " << path << "\n";
        std::cout << "inputs " << net.P << ", outputs " << net.R << ", " << net.depth()
                  << " hidden layer(s)\n";
        std::size_t params = 0;
        for (std::size_t l = 0; l < net.depth(); ++l) {
            const auto& layer = net.layers[l];
            std::cout << "  layer " << l + 1 << ": " << layer.neurons() << " neurons, W "
                      << layer.W.rows() << "x" << layer.W.cols() << ", Gamma "
                      << layer.Gamma.rows() << "x" << layer.Gamma.cols() << "\n";
            params += 2 * layer.W.size() + 2 * layer.b.size() + 2 * layer.Gamma.size() +
                      layer.sigma.size();
        }
        std::cout << "total real parameters: " << params << "\n";
        const char* mode = net.input_norm.mode == crbf::NormStats::Mode::Symmetric
                               ? "symmetric"
                               : "asymmetric";
        std::cout << "input normalization: " << mode << ", scale " << net.input_norm.scale
                  << "\n";
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitIoError;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep complex-valued RBF network experiments"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run an experiment grid and emit CSV curves");
    std::string config_path, preset, out_dir;
    std::uint64_t seed = 1;
    bool desk_scale = false, save_model = false;
    std::size_t jobs = 1;
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--preset", preset, "Built-in preset name (fig1-*, fig2-*)");
    auto* seed_opt = run->add_option("--seed", seed, "Master seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--desk-scale", desk_scale, "Shrink to 500 epochs / 10 seeds");
    run->add_option("--jobs", jobs, "Parallel seed workers")->default_val(1);
    run->add_flag("--save-model", save_model, "Save seed-0 final network checkpoint");

    // verify
    auto* verify = app.add_subcommand("verify", "Gradient and init-statistics checks");
    std::uint64_t verify_seed = 42;
    verify->add_option("--seed", verify_seed, "RNG seed");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Export a generated dataset as CSV");
    std::size_t samples = 3840;
    double ebn0 = 26.0;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "dataset.csv";
    gen->add_option("--samples", samples, "Number of samples");
    gen->add_option("--ebn0", ebn0, "Eb/N0 in dB");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "Output CSV path");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Summarize a model checkpoint");
    std::string ckpt_path;
    inspect->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (config_path.empty() == preset.empty()) {
            std::cerr << "error: pass exactly one of --config or --preset\n";
            return kExitConfigError;
        }
        return cmd_run(config_path, preset, seed, seed_opt->count() > 0, out_dir,
                       desk_scale, jobs, save_model);
    }
    if (verify->parsed()) return cmd_verify(verify_seed);
    if (gen->parsed()) return cmd_gen_data(samples, ebn0, gen_seed, gen_out);
    if (inspect->parsed()) return cmd_inspect(ckpt_path);
    return kExitConfigError;
}
