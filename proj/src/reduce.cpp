#include "medpipe/reduce.hpp"

#include <algorithm>
#include <cmath>

#include "medpipe/errors.hpp"

namespace medpipe {

namespace {

std::vector<double> column_mean(const Matrix& x) {
    std::vector<double> mu(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) mu[c] += x(r, c);
    for (double& v : mu) v /= static_cast<double>(x.rows());
    return mu;
}

Matrix scatter_about(const Matrix& x, std::span<const double> mu) {
    Matrix s(x.cols(), x.cols(), 0.0);
    std::vector<double> d(x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) d[c] = x(r, c) - mu[c];
        for (std::size_t i = 0; i < x.cols(); ++i)
            for (std::size_t j = i; j < x.cols(); ++j) s(i, j) += d[i] * d[j];
    }
    for (std::size_t i = 0; i < x.cols(); ++i)
        for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
    return s;
}

PcaModel pca_from_eigen(const Matrix& x, const EigenResult& eig, std::size_t m,
                        std::vector<double> mu) {
    PcaModel model;
    model.mean = std::move(mu);
    model.basis = Matrix(x.cols(), m);
    model.eigenvalues.resize(m);
    for (std::size_t c = 0; c < m; ++c) {
        model.eigenvalues[c] = std::max(eig.values[c], 0.0);
        for (std::size_t r = 0; r < x.cols(); ++r) model.basis(r, c) = eig.vectors(r, c);
    }
    return model;
}

}  // namespace

PcaModel pca_fit(const Matrix& x, std::size_t m) {
    if (x.rows() < 2) throw InvalidArgument("pca_fit: need at least 2 samples");
    const std::size_t max_m = std::min(x.rows() - 1, x.cols());
    if (m < 1 || m > max_m)
        throw InvalidArgument("pca_fit: m must be in [1, min(samples-1, features)]");
    std::vector<double> mu = column_mean(x);
    const EigenResult eig = jacobi_eigen(scatter_about(x, mu));
    return pca_from_eigen(x, eig, m, std::move(mu));
}

PcaModel pca_fit_fraction(const Matrix& x, double fraction) {
    if (x.rows() < 2) throw InvalidArgument("pca_fit: need at least 2 samples");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw InvalidArgument("pca_fit: variance fraction must be in (0, 1]");
    std::vector<double> mu = column_mean(x);
    const EigenResult eig = jacobi_eigen(scatter_about(x, mu));

    double total = 0.0;
    for (double v : eig.values) total += std::max(v, 0.0);
    const std::size_t max_m = std::min(x.rows() - 1, x.cols());
    std::size_t m = 1;
    if (total > 0.0) {
        double cum = 0.0;
        for (m = 0; m < max_m; ) {
            cum += std::max(eig.values[m], 0.0);
            ++m;
            if (cum / total >= fraction - 1e-12) break;
        }
    }
    return pca_from_eigen(x, eig, m, std::move(mu));
}

std::vector<double> pca_transform_row(const PcaModel& model, std::span<const double> row) {
    if (row.size() != model.in_dim())
        throw InvalidArgument("pca_transform: expected " + std::to_string(model.in_dim()) +
                              " features, got " + std::to_string(row.size()));
    std::vector<double> centered(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) centered[i] = row[i] - model.mean[i];
    return model.basis.tmul_vec(centered);
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    Matrix out(x.rows(), model.out_dim());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const std::vector<double> y = pca_transform_row(model, x.row(r));
        for (std::size_t c = 0; c < y.size(); ++c) out(r, c) = y[c];
    }
    return out;
}

std::vector<double> pca_reconstruct_row(const PcaModel& model, std::span<const double> y) {
    if (y.size() != model.out_dim())
        throw InvalidArgument("pca_reconstruct: component count mismatch");
    std::vector<double> x = model.mean;
    for (std::size_t c = 0; c < model.out_dim(); ++c)
        for (std::size_t r = 0; r < model.in_dim(); ++r) x[r] += model.basis(r, c) * y[c];
    return x;
}

void scatter_matrices(const Matrix& x, const std::vector<int>& labels, Matrix& s_w,
                      Matrix& s_b) {
    if (x.rows() == 0 || labels.size() != x.rows())
        throw InvalidArgument("scatter_matrices: samples and labels must align");
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);

    const std::size_t f = x.cols();
    std::vector<std::vector<double>> class_mu(c, std::vector<double>(f, 0.0));
    std::vector<std::size_t> counts(c, 0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        ++counts[labels[r]];
        for (std::size_t j = 0; j < f; ++j) class_mu[labels[r]][j] += x(r, j);
    }
    for (int k = 0; k < c; ++k) {
        if (counts[k] == 0) throw InvalidArgument("scatter_matrices: empty class");
        for (double& v : class_mu[k]) v /= static_cast<double>(counts[k]);
    }

    s_w = Matrix(f, f, 0.0);
    std::vector<double> d(f);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto& mu = class_mu[labels[r]];
        for (std::size_t j = 0; j < f; ++j) d[j] = x(r, j) - mu[j];
        for (std::size_t i = 0; i < f; ++i)
            for (std::size_t j = i; j < f; ++j) s_w(i, j) += d[i] * d[j];
    }

    // Overall mean here is the mean of the class means, which keeps S_b at
    // rank <= c-1 regardless of class imbalance.
    std::vector<double> mu(f, 0.0);
    for (int k = 0; k < c; ++k)
        for (std::size_t j = 0; j < f; ++j) mu[j] += class_mu[k][j];
    for (double& v : mu) v /= static_cast<double>(c);

    s_b = Matrix(f, f, 0.0);
    for (int k = 0; k < c; ++k) {
        for (std::size_t j = 0; j < f; ++j) d[j] = class_mu[k][j] - mu[j];
        for (std::size_t i = 0; i < f; ++i)
            for (std::size_t j = i; j < f; ++j) s_b(i, j) += d[i] * d[j];
    }
    for (std::size_t i = 0; i < f; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            s_w(i, j) = s_w(j, i);
            s_b(i, j) = s_b(j, i);
        }
}

LdaModel lda_fit(const Matrix& x, const std::vector<int>& labels, std::size_t d) {
    if (x.rows() < 2 || labels.size() != x.rows())
        throw InvalidArgument("lda_fit: samples and labels must align");
    int c = 0;
    std::vector<std::size_t> counts;
    for (int l : labels) {
        if (l < 0) throw InvalidArgument("lda_fit: negative class id");
        c = std::max(c, l + 1);
        if (static_cast<int>(counts.size()) < c) counts.resize(c, 0);
        ++counts[l];
    }
    if (c < 2) throw InvalidArgument("lda_fit: need at least 2 classes");
    for (int k = 0; k < c; ++k)
        if (counts[k] < 2)
            throw InvalidArgument("lda_fit: class " + std::to_string(k) +
                                  " needs at least 2 samples");
    if (d < 1 || d > static_cast<std::size_t>(c - 1))
        throw InvalidArgument("lda_fit: d must be in [1, class count - 1]");

    const std::size_t f = x.cols();
    Matrix s_w, s_b;
    scatter_matrices(x, labels, s_w, s_b);

    // Regularize before whitening; epsilon follows the average eigenvalue of
    // S_w and falls back to an absolute floor for zero scatter.
    double eps = 1e-8 * s_w.trace() / static_cast<double>(f);
    if (!(eps > 0.0)) eps = 1e-12;
    Matrix s_w_reg = s_w;
    for (std::size_t i = 0; i < f; ++i) s_w_reg(i, i) += eps;

    Matrix l;
    try {
        l = cholesky(s_w_reg);
    } catch (const InvalidArgument&) {
        throw InvalidArgument("lda_fit: within-class scatter is singular beyond rescue");
    }

    // Whitened problem: M = L^-1 S_b L^-T, then map eigenvectors back.
    Matrix m(f, f);
    std::vector<double> col(f);
    for (std::size_t j = 0; j < f; ++j) {
        for (std::size_t i = 0; i < f; ++i) col[i] = s_b(i, j);
        const std::vector<double> w = solve_lower(l, col);
        for (std::size_t i = 0; i < f; ++i) m(i, j) = w[i];
    }
    Matrix mt = m.transposed();
    for (std::size_t j = 0; j < f; ++j) {
        for (std::size_t i = 0; i < f; ++i) col[i] = mt(i, j);
        const std::vector<double> w = solve_lower(l, col);
        for (std::size_t i = 0; i < f; ++i) m(j, i) = w[i];
    }
    for (std::size_t i = 0; i < f; ++i)
        for (std::size_t j = i + 1; j < f; ++j) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = avg;
        }

    const EigenResult eig = jacobi_eigen(m);

    LdaModel model;
    model.basis = Matrix(f, d);
    model.eigenvalues.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < f; ++i) col[i] = eig.vectors(i, k);
        std::vector<double> v = solve_lower_transposed(l, col);
        double norm = 0.0;
        for (double t : v) norm += t * t;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (double& t : v) t /= norm;
        }
        std::size_t arg = 0;
        for (std::size_t i = 1; i < f; ++i)
            if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        const double sign = v[arg] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < f; ++i) model.basis(i, k) = sign * v[i];
        model.eigenvalues[k] = std::max(eig.values[k], 0.0);
    }

    // Mean of class means, matching the S_b centering.
    std::vector<std::vector<double>> class_mu(c, std::vector<double>(f, 0.0));
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < f; ++j) class_mu[labels[r]][j] += x(r, j);
    for (int k = 0; k < c; ++k)
        for (double& v : class_mu[k]) v /= static_cast<double>(counts[k]);
    model.mean.assign(f, 0.0);
    for (int k = 0; k < c; ++k)
        for (std::size_t j = 0; j < f; ++j) model.mean[j] += class_mu[k][j];
    for (double& v : model.mean) v /= static_cast<double>(c);

    model.class_means = Matrix(c, d);
    for (int k = 0; k < c; ++k) {
        const std::vector<double> y = lda_transform_row(model, class_mu[k]);
        for (std::size_t j = 0; j < d; ++j) model.class_means(k, j) = y[j];
    }
    return model;
}

std::vector<double> lda_transform_row(const LdaModel& model, std::span<const double> row) {
    if (row.size() != model.in_dim())
        throw InvalidArgument("lda_transform: expected " + std::to_string(model.in_dim()) +
                              " features, got " + std::to_string(row.size()));
    std::vector<double> centered(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) centered[i] = row[i] - model.mean[i];
    return model.basis.tmul_vec(centered);
}

Matrix lda_transform(const LdaModel& model, const Matrix& x) {
    Matrix out(x.rows(), model.out_dim());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const std::vector<double> y = lda_transform_row(model, x.row(r));
        for (std::size_t c = 0; c < y.size(); ++c) out(r, c) = y[c];
    }
    return out;
}

PcaLdaModel pca_lda_fit(const Matrix& x, const std::vector<int>& labels, double fraction,
                        std::size_t d) {
    PcaLdaModel model;
    model.pca = pca_fit_fraction(x, fraction);
    model.lda = lda_fit(pca_transform(model.pca, x), labels, d);
    return model;
}

Matrix pca_lda_transform(const PcaLdaModel& model, const Matrix& x) {
    return lda_transform(model.lda, pca_transform(model.pca, x));
}

}  // namespace medpipe
