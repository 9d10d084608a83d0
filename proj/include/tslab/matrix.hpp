#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tslab/errors.hpp"

namespace tslab {

// Dense row-major matrix. Element (i,j) lives at values[i*cols + j].
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return values_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return values_[i * cols_ + j];
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double* row_ptr(std::size_t i) { return values_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return values_.data() + i * cols_; }

    std::vector<double> row(std::size_t i) const {
        return std::vector<double>(row_ptr(i), row_ptr(i) + cols_);
    }

    void set_row(std::size_t i, const std::vector<double>& v) {
        assert(v.size() == cols_);
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // y = A x
    std::vector<double> mul(const std::vector<double>& x) const {
        assert(x.size() == cols_);
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double* r = row_ptr(i);
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Matrix mul(const Matrix& b) const {
        assert(cols_ == b.rows_);
        Matrix c(rows_, b.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a_ik = (*this)(i, k);
                if (a_ik == 0.0) continue;
                const double* brow = b.row_ptr(k);
                double* crow = c.row_ptr(i);
                for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += a_ik * brow[j];
            }
        }
        return c;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

}  // namespace tslab
