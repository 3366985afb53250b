#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "crbf/rng.hpp"

namespace crbf {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;
using RealVector = std::vector<double>;

/// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() : rows_(0), cols_(0) {}

    ComplexMatrix(std::size_t rows, std::size_t cols, cplx fill = cplx{0.0, 0.0})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("ComplexMatrix: zero dimension");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    /// Pointer to the start of row r (contiguous cols() entries).
    cplx* row(std::size_t r) { return data_.data() + r * cols_; }
    const cplx* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

private:
    std::size_t rows_, cols_;
    std::vector<cplx> data_;
};

/// Matrix of i.i.d. circular complex Gaussian entries CG(0, variance).
inline ComplexMatrix cg_sample(std::size_t rows, std::size_t cols, double variance,
                               RngStream& rng) {
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw std::invalid_argument("cg_sample: variance must be finite and >= 0");
    ComplexMatrix m(rows, cols);
    for (auto& z : m.data()) z = rng.complex_gaussian(variance);
    return m;
}

inline cplx complex_mean(const ComplexMatrix& data) {
    if (data.size() == 0)
        throw std::invalid_argument("complex_mean: empty data");
    cplx acc{0.0, 0.0};
    for (const auto& z : data.data()) acc += z;
    return acc / static_cast<double>(data.size());
}

/// Total complex variance E[|z - mu|^2], population convention.
inline double complex_variance(const ComplexMatrix& data) {
    const cplx mu = complex_mean(data);
    double acc = 0.0;
    for (const auto& z : data.data()) acc += std::norm(z - mu);
    return acc / static_cast<double>(data.size());
}

struct ComponentStats {
    double mean_re, mean_im;
    double var_re, var_im;
};

/// Per-component means and population variances of Re and Im parts.
inline ComponentStats component_stats(const ComplexMatrix& data) {
    if (data.size() == 0)
        throw std::invalid_argument("component_stats: empty data");
    const double n = static_cast<double>(data.size());
    double mre = 0.0, mim = 0.0;
    for (const auto& z : data.data()) {
        mre += z.real();
        mim += z.imag();
    }
    mre /= n;
    mim /= n;
    double vre = 0.0, vim = 0.0;
    for (const auto& z : data.data()) {
        const double dr = z.real() - mre;
        const double di = z.imag() - mim;
        vre += dr * dr;
        vim += di * di;
    }
    return {mre, mim, vre / n, vim / n};
}

/// Squared Euclidean distance sum |a_i - b_i|^2.
inline double sq_distance(const ComplexVector& a, const ComplexVector& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("sq_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i] - b[i]);
    return acc;
}

inline double sq_distance(const cplx* a, const cplx* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::norm(a[i] - b[i]);
    return acc;
}

} // namespace crbf
