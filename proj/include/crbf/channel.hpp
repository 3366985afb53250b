#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crbf/linalg.hpp"
#include "crbf/rng.hpp"

namespace crbf {

/// 16-QAM, Gray-mapped, unit average power. Bits b3 b2 select the
/// in-phase level, b1 b0 the quadrature level, with the reflected Gray
/// code 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3 on each axis; the
/// alphabet is {-3,-1,+1,+3}^2 / sqrt(10).
inline cplx qam16_map(unsigned bits) {
    if (bits > 15)
        throw std::invalid_argument("qam16_map: symbol index out of range");
    static constexpr std::array<double, 4> gray_level = {-3.0, -1.0, 3.0, 1.0};
    const double i = gray_level[(bits >> 2) & 3];
    const double q = gray_level[bits & 3];
    return cplx{i, q} / std::sqrt(10.0);
}

struct Constellation {
    std::string name = "QAM16";
    ComplexVector symbols;
    unsigned bits_per_symbol = 4;

    static Constellation qam16() {
        Constellation c;
        c.symbols.resize(16);
        for (unsigned b = 0; b < 16; ++b) c.symbols[b] = qam16_map(b);
        return c;
    }
};

struct ChannelRealization {
    ComplexMatrix H;
    std::uint64_t seed = 0;

    std::size_t n_rx() const { return H.rows(); }
    std::size_t n_tx() const { return H.cols(); }
};

/// Frequency-flat MIMO channel: H entries i.i.d. circular complex
/// Gaussian with unit total variance, so |H| is Rayleigh-distributed.
inline ChannelRealization rayleigh_mimo(std::size_t n_tx, std::size_t n_rx, RngStream& rng,
                                        std::uint64_t seed = 0) {
    if (n_tx == 0 || n_rx == 0)
        throw std::invalid_argument("rayleigh_mimo: antenna counts must be >= 1");
    return ChannelRealization{cg_sample(n_rx, n_tx, 1.0, rng), seed};
}

/// Total complex noise variance N0 = Es / (bits * 10^(EbN0/10)).
inline double awgn_variance(double ebn0_db, unsigned bits_per_symbol, double symbol_power) {
    if (bits_per_symbol == 0)
        throw std::invalid_argument("awgn_variance: bits_per_symbol must be >= 1");
    if (!(symbol_power > 0.0))
        throw std::invalid_argument("awgn_variance: symbol power must be > 0");
    return symbol_power /
           (static_cast<double>(bits_per_symbol) * std::pow(10.0, ebn0_db / 10.0));
}

struct SupervisedDataset {
    std::vector<ComplexVector> inputs;  // length P = 4 * n_rx
    std::vector<ComplexVector> targets; // length R = n_tx, clean symbols
    double ebn0_db = 0.0;
    std::uint64_t seed = 0;

    std::size_t size() const { return inputs.size(); }
};

/// Supervised decoding task: per slot draw n_tx independent 16-QAM
/// symbols s (the target) and receive r = H s + n with
/// n ~ CG(0, N0 I). The 16-entry input stacks the current received
/// vector with the received vectors of the previous three slots
/// (zero vectors before the start of the stream).
inline SupervisedDataset generate_dataset(std::size_t n_samples, double ebn0_db,
                                          const ChannelRealization& channel, RngStream& rng,
                                          std::uint64_t seed = 0) {
    const Constellation qam = Constellation::qam16();
    const std::size_t n_tx = channel.n_tx();
    const std::size_t n_rx = channel.n_rx();
    const double n0 = awgn_variance(ebn0_db, qam.bits_per_symbol, 1.0);

    SupervisedDataset ds;
    ds.ebn0_db = ebn0_db;
    ds.seed = seed;
    ds.inputs.reserve(n_samples);
    ds.targets.reserve(n_samples);

    constexpr std::size_t kHistory = 4; // current slot + 3 previous
    std::vector<ComplexVector> history(kHistory, ComplexVector(n_rx, cplx{0.0, 0.0}));

    for (std::size_t t = 0; t < n_samples; ++t) {
        ComplexVector s(n_tx);
        for (auto& sym : s)
            sym = qam.symbols[rng.uniform_below(qam.symbols.size())];

        ComplexVector r(n_rx);
        for (std::size_t i = 0; i < n_rx; ++i) {
            cplx acc{0.0, 0.0};
            const cplx* hrow = channel.H.row(i);
            for (std::size_t j = 0; j < n_tx; ++j) acc += hrow[j] * s[j];
            r[i] = acc + rng.complex_gaussian(n0);
        }

        for (std::size_t k = kHistory - 1; k > 0; --k) history[k] = history[k - 1];
        history[0] = r;

        ComplexVector input;
        input.reserve(kHistory * n_rx);
        for (const auto& slot : history)
            input.insert(input.end(), slot.begin(), slot.end());
        ds.inputs.push_back(std::move(input));
        ds.targets.push_back(std::move(s));
    }
    return ds;
}

/// CSV layout: sample index, then re/im pairs for every input entry,
/// then re/im pairs for every target entry.
inline void export_dataset_csv(const SupervisedDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("export_dataset_csv: cannot open " + path);
    out.precision(12);
    out << "sample";
    const std::size_t P = ds.inputs.empty() ? 0 : ds.inputs.front().size();
    const std::size_t R = ds.targets.empty() ? 0 : ds.targets.front().size();
    for (std::size_t p = 0; p < P; ++p) out << ",in" << p << "_re,in" << p << "_im";
    for (std::size_t r = 0; r < R; ++r) out << ",tgt" << r << "_re,tgt" << r << "_im";
    out << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << i;
        for (const auto& z : ds.inputs[i]) out << "," << z.real() << "," << z.imag();
        for (const auto& z : ds.targets[i]) out << "," << z.real() << "," << z.imag();
        out << "\n";
    }
    if (!out)
        throw std::runtime_error("export_dataset_csv: write failed for " + path);
}

} // namespace crbf
