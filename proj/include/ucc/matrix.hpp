#pragma once

#include "ucc/errors.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ucc {

/// Dense row-major matrix of doubles. The single storage type of the numeric
/// substrate; MLP, KDE and clustering all operate on it.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a[m x k] * b[k x n] -> [m x n]
Matrix matmul(const Matrix& a, const Matrix& b);
/// transpose(a) * b, a [m x k], b [m x n] -> [k x n]
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * transpose(b), a [m x k], b [n x k] -> [m x n]
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

/// Sum of elementwise absolute differences; shapes must match.
double l1_distance(const Matrix& a, const Matrix& b);

}  // namespace ucc
