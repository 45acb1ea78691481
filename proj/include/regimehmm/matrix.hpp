#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "regimehmm/error.hpp"

namespace regimehmm {

// Dense row-major matrix. Rows are contiguous, so per-row spans feed the
// vector kernels directly.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// T x d observation block stored column-major: each feature column is
// contiguous, which is what the EM reductions and split scans iterate over.
class ObservationMatrix {
  public:
    ObservationMatrix() = default;
    ObservationMatrix(std::size_t n_rows, std::size_t n_cols)
        : n_rows_(n_rows), n_cols_(n_cols), data_(n_rows * n_cols, 0.0) {}

    static ObservationMatrix from_columns(const std::vector<std::vector<double>>& cols);

    double& at(std::size_t t, std::size_t j) { return data_[j * n_rows_ + t]; }
    double at(std::size_t t, std::size_t j) const { return data_[j * n_rows_ + t]; }

    std::span<double> col(std::size_t j) { return {data_.data() + j * n_rows_, n_rows_}; }
    std::span<const double> col(std::size_t j) const {
        return {data_.data() + j * n_rows_, n_rows_};
    }

    std::vector<double> row(std::size_t t) const;

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return n_cols_; }
    bool empty() const noexcept { return data_.empty(); }

    bool all_finite() const noexcept;

  private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<double> data_;
};

}  // namespace regimehmm
