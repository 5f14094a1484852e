#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "explika/errors.hpp"

namespace explika {

// Dense row-major matrix of doubles. Row access is the hot path for the
// learners, so rows are contiguous.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<const double> row(std::size_t r) const {
        assert(r < rows_);
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) {
        assert(r < rows_);
        return {data_.data() + r * cols_, cols_};
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0; // population form
};

inline MeanSd mean_sd(std::span<const double> v) {
    MeanSd out;
    if (v.empty()) return out;
    double sum = 0.0;
    for (const double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) {
        const double d = x - out.mean;
        ss += d * d;
    }
    out.sd = std::sqrt(ss / static_cast<double>(v.size()));
    return out;
}

// Solves A x = b for symmetric positive definite A (in-place Cholesky).
// A is row-major n*n, b has length n. The systems solved here are small
// (feature counts in the tens), so a plain dense factorization is enough.
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    assert(a.size() == n * n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw numeric_error("cholesky_solve: matrix not positive definite at pivot " +
                                std::to_string(j));
        }
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    // L y = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    // L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return b;
}

} // namespace explika
