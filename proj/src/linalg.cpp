#include "medpipe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medpipe/errors.hpp"

namespace medpipe {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_)
        throw InvalidArgument("matrix multiply: inner dimensions differ");
    Matrix out(rows_, rhs.cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(r, k);
            if (a == 0.0) continue;
            for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
        }
    }
    return out;
}

std::vector<double> Matrix::mul_vec(std::span<const double> v) const {
    if (v.size() != cols_) throw InvalidArgument("matrix-vector multiply: size mismatch");
    std::vector<double> out(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = dot(row(r), v);
    return out;
}

std::vector<double> Matrix::tmul_vec(std::span<const double> v) const {
    if (v.size() != rows_) throw InvalidArgument("vector-matrix multiply: size mismatch");
    std::vector<double> out(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double a = v[r];
        if (a == 0.0) continue;
        for (std::size_t c = 0; c < cols_; ++c) out[c] += a * (*this)(r, c);
    }
    return out;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace {

double offdiag_norm(const Matrix& a) {
    const std::size_t n = a.rows();
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
}

}  // namespace

EigenResult jacobi_eigen(const Matrix& sym, int max_sweeps) {
    const std::size_t n = sym.rows();
    if (n == 0 || sym.cols() != n)
        throw InvalidArgument("jacobi_eigen: matrix must be square and nonempty");

    Matrix a = sym;
    // Symmetrize defensively; the sweep only reads the upper triangle.
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
            const double m = 0.5 * (a(p, q) + a(q, p));
            a(p, q) = a(q, p) = m;
        }

    Matrix v = Matrix::identity(n);
    const double norm = std::max(a.frobenius_norm(), 1e-300);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (offdiag_norm(a) <= 1e-14 * norm) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double h = t * apq;

                a(p, p) -= h;
                a(q, q) += h;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = akp - s * (akq + tau * akp);
                    a(p, k) = a(k, p);
                    a(k, q) = akq + s * (akp - tau * akq);
                    a(q, k) = a(k, q);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = vkp - s * (vkq + tau * vkp);
                    v(k, q) = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a(i, i) != a(j, j)) return a(i, i) > a(j, j);
        return i < j;
    });

    EigenResult res;
    res.values.resize(n);
    res.vectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        res.values[c] = a(src, src);
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (std::abs(v(r, src)) > best) {
                best = std::abs(v(r, src));
                arg = r;
            }
        }
        const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) res.vectors(r, c) = sign * v(r, src);
    }
    return res;
}

Matrix cholesky(const Matrix& spd) {
    const std::size_t n = spd.rows();
    if (n == 0 || spd.cols() != n)
        throw InvalidArgument("cholesky: matrix must be square and nonempty");
    Matrix l(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = spd(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) throw InvalidArgument("cholesky: matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

std::vector<double> solve_lower(const Matrix& L, std::span<const double> b) {
    const std::size_t n = L.rows();
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * x[k];
        x[i] = s / L(i, i);
    }
    return x;
}

std::vector<double> solve_lower_transposed(const Matrix& L, std::span<const double> b) {
    const std::size_t n = L.rows();
    std::vector<double> x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= L(k, ii) * x[k];
        x[ii] = s / L(ii, ii);
    }
    return x;
}

}  // namespace medpipe
