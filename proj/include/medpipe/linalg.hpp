#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace medpipe {

// Dense row-major matrix of doubles. Sized for feature-space work
// (tens of columns), not for large-scale linear algebra.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix transposed() const;
    Matrix operator*(const Matrix& rhs) const;
    std::vector<double> mul_vec(std::span<const double> v) const;

    // v^T * M, i.e. multiply from the left by a row vector.
    std::vector<double> tmul_vec(std::span<const double> v) const;

    double trace() const;
    double frobenius_norm() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct EigenResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // columns aligned with values
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues come
// back sorted descending; each eigenvector's largest-magnitude entry is made
// positive so serialized models are reproducible.
EigenResult jacobi_eigen(const Matrix& sym, int max_sweeps = 100);

// Cholesky factor L with A = L L^T. Throws InvalidArgument if A is not
// positive definite.
Matrix cholesky(const Matrix& spd);

std::vector<double> solve_lower(const Matrix& L, std::span<const double> b);
std::vector<double> solve_lower_transposed(const Matrix& L, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace medpipe
