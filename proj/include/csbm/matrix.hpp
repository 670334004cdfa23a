#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "csbm/errors.hpp"

namespace csbm {

/// Dense row-major matrix of doubles. Node representations are N x d.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix column(std::span<const double> values) {
        Matrix m(values.size(), 1);
        std::copy(values.begin(), values.end(), m.data_.begin());
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double &operator()(std::size_t r, std::size_t c) noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool operator==(const Matrix &) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument("matrix shapes differ");
}

/// a*x + b*y, elementwise.
inline Matrix axpby(double a, const Matrix &x, double b, const Matrix &y) {
    require_same_shape(x, y);
    Matrix out(x.rows(), x.cols());
    auto xv = x.values();
    auto yv = y.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i)
        ov[i] = a * xv[i] + b * yv[i];
    return out;
}

inline double max_abs(const Matrix &m) {
    double best = 0.0;
    for (double v : m.values())
        best = std::max(best, v < 0 ? -v : v);
    return best;
}

inline double max_abs_diff(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b);
    double best = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        best = std::max(best, d < 0 ? -d : d);
    }
    return best;
}

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if ((sum_ < 0 ? -sum_ : sum_) >= (x < 0 ? -x : x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace csbm
