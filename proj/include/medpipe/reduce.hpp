#pragma once

#include <cstddef>
#include <vector>

#include "medpipe/linalg.hpp"

namespace medpipe {

// Fitted mean + top-m eigenpairs of the unnormalized total scatter matrix
// S = sum (x - mu)(x - mu)^T. Basis columns are orthonormal; eigenvalues
// descend with tiny negatives clamped to zero.
struct PcaModel {
    std::vector<double> mean;
    Matrix basis;  // features x m
    std::vector<double> eigenvalues;

    std::size_t in_dim() const { return mean.size(); }
    std::size_t out_dim() const { return basis.cols(); }
};

PcaModel pca_fit(const Matrix& x, std::size_t m);

// Keeps the smallest m whose cumulative eigenvalue share reaches `fraction`.
PcaModel pca_fit_fraction(const Matrix& x, double fraction);

Matrix pca_transform(const PcaModel& model, const Matrix& x);
std::vector<double> pca_transform_row(const PcaModel& model, std::span<const double> row);

// Reconstruction mean + basis * y; used by the residual diagnostics.
std::vector<double> pca_reconstruct_row(const PcaModel& model, std::span<const double> y);

// Generalized eigenvectors of S_b v = lambda S_w v via Cholesky whitening of
// the (regularized) within-class scatter. Projection subtracts the mean of
// the class means before applying the basis.
struct LdaModel {
    std::vector<double> mean;  // mean of class means
    Matrix basis;              // features x d, unit-norm columns
    std::vector<double> eigenvalues;
    Matrix class_means;  // c x d projected centroids

    std::size_t in_dim() const { return mean.size(); }
    std::size_t out_dim() const { return basis.cols(); }
};

LdaModel lda_fit(const Matrix& x, const std::vector<int>& labels, std::size_t d);
Matrix lda_transform(const LdaModel& model, const Matrix& x);
std::vector<double> lda_transform_row(const LdaModel& model, std::span<const double> row);

// Within-/between-class scatter of a labeled sample matrix (S_w, S_b).
// Exposed for diagnostics and tests.
void scatter_matrices(const Matrix& x, const std::vector<int>& labels, Matrix& s_w,
                      Matrix& s_b);

struct PcaLdaModel {
    PcaModel pca;
    LdaModel lda;
};

// PCA keeping `fraction` of total variance, then LDA to d dimensions in the
// rotated space.
PcaLdaModel pca_lda_fit(const Matrix& x, const std::vector<int>& labels, double fraction,
                        std::size_t d);
Matrix pca_lda_transform(const PcaLdaModel& model, const Matrix& x);

}  // namespace medpipe
