#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "bfvae/error.hpp"

namespace bfvae {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles with an explicit shape.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        require_shape(data_.size() == rows_ * cols_,
                      "Matrix: storage length " + std::to_string(data_.size()) +
                          " does not match shape " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            require_shape(r.size() == cols_, "Matrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix from_row(std::span<const double> v) {
        return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    Vector row_vector(std::size_t r) const {
        auto s = row(r);
        return Vector(s.begin(), s.end());
    }

    void fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

    /// Rows [first, first + count) as a new matrix.
    Matrix slice_rows(std::size_t first, std::size_t count) const {
        require_shape(first + count <= rows_, "Matrix::slice_rows out of range");
        return Matrix(count, cols_,
                      std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                                          data_.begin() +
                                              static_cast<std::ptrdiff_t>((first + count) * cols_)));
    }

    /// Gathers the listed rows in order.
    Matrix gather_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            require_shape(idx[i] < rows_, "Matrix::gather_rows index out of range");
            std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols_), cols_,
                        out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
        }
        return out;
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
    const std::size_t n = y.size();
    const double* xp = x.data();
    double* yp = y.data();
    for (std::size_t i = 0; i < n; ++i) yp[i] += a * xp[i];
}

/// out = x * W^T + bias (row-wise), with W stored [out x in].
inline void affine_rows(const Matrix& x, const Matrix& weights, std::span<const double> bias,
                        Matrix& out) {
    require_shape(x.cols() == weights.cols(), "affine_rows: input width " +
                                                  std::to_string(x.cols()) + " != weight in-dim " +
                                                  std::to_string(weights.cols()));
    const std::size_t n_out = weights.rows();
    const std::size_t n_in = weights.cols();
    const Matrix wt = weights.transposed();  // [in x out] so the inner loop is contiguous
    out = Matrix(x.rows(), n_out);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto o = out.row(r);
        std::copy(bias.begin(), bias.end(), o.begin());
        auto xr = x.row(r);
        for (std::size_t k = 0; k < n_in; ++k) axpy(xr[k], wt.row(k), o);
    }
}

/// Tree summation; rounding error grows with log(n) rather than n.
inline double pairwise_sum(std::span<const double> v) noexcept {
    constexpr std::size_t kBlock = 32;
    if (v.size() <= kBlock) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    require_shape(a.size() == b.size(), "squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace bfvae
