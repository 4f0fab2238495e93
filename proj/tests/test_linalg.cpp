#include <doctest.h>

#include <cmath>

#include "medpipe/errors.hpp"
#include "medpipe/linalg.hpp"
#include "medpipe/rng.hpp"

using namespace medpipe;

namespace {

Matrix random_symmetric(Rng& rng, std::size_t n, double scale = 1.0) {
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = scale * rng.uniform(-1.0, 1.0);
            s(i, j) = v;
            s(j, i) = v;
        }
    return s;
}

}  // namespace

TEST_CASE("jacobi on a diagonal matrix returns sorted diagonal") {
    Matrix d(3, 3, 0.0);
    d(0, 0) = 1.0;
    d(1, 1) = 5.0;
    d(2, 2) = 3.0;
    const EigenResult e = jacobi_eigen(d);
    CHECK(e.values[0] == doctest::Approx(5.0));
    CHECK(e.values[1] == doctest::Approx(3.0));
    CHECK(e.values[2] == doctest::Approx(1.0));
}

TEST_CASE("jacobi on the classic 2x2") {
    Matrix s(2, 2);
    s(0, 0) = 2.0;
    s(0, 1) = 1.0;
    s(1, 0) = 1.0;
    s(1, 1) = 2.0;
    const EigenResult e = jacobi_eigen(s);
    CHECK(e.values[0] == doctest::Approx(3.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(inv_sqrt2));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(inv_sqrt2));
    // sign convention: largest-magnitude entry positive
    CHECK(e.vectors(0, 0) > 0.0);
}

TEST_CASE("jacobi eigenpairs satisfy residual, orthonormality and trace conservation") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(9);
        const Matrix s = random_symmetric(rng, n, 3.0);
        const EigenResult e = jacobi_eigen(s);
        const double norm = s.frobenius_norm();

        double trace_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            trace_sum += e.values[k];
            if (k + 1 < n) CHECK(e.values[k] >= e.values[k + 1]);
            std::vector<double> v(n), sv(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) v[i] = e.vectors(i, k);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) sv[i] += s(i, j) * v[j];
            double resid = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = sv[i] - e.values[k] * v[i];
                resid += r * r;
            }
            CHECK(std::sqrt(resid) <= 1e-8 * norm);
        }
        CHECK(trace_sum == doctest::Approx(s.trace()).epsilon(1e-10));

        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) d += e.vectors(i, a) * e.vectors(i, b);
                CHECK(d == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
            }
    }
}

TEST_CASE("cholesky factors and solves") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(6);
        // build SPD as A A^T + n I
        Matrix a(n, n);
        for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
        Matrix spd(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < n; ++k) spd(i, j) += a(i, k) * a(j, k);
                if (i == j) spd(i, j) += static_cast<double>(n);
            }
        const Matrix l = cholesky(spd);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double rec = 0.0;
                for (std::size_t k = 0; k < n; ++k) rec += l(i, k) * l(j, k);
                CHECK(rec == doctest::Approx(spd(i, j)).epsilon(1e-10));
            }

        std::vector<double> b(n);
        for (double& v : b) v = rng.uniform(-2.0, 2.0);
        const std::vector<double> y = solve_lower(l, b);
        const std::vector<double> x = solve_lower_transposed(l, y);
        // A x should equal b
        for (std::size_t i = 0; i < n; ++i) {
            double ax = 0.0;
            for (std::size_t j = 0; j < n; ++j) ax += spd(i, j) * x[j];
            CHECK(ax == doctest::Approx(b[i]).epsilon(1e-8));
        }
    }
}

TEST_CASE("cholesky rejects indefinite matrices") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = 2.0;
    m(1, 0) = 2.0;
    m(1, 1) = 1.0;  // eigenvalues 3, -1
    CHECK_THROWS_AS(cholesky(m), InvalidArgument);
}

TEST_CASE("matrix multiply and transpose") {
    Matrix a(2, 3);
    a.data() = {1, 2, 3, 4, 5, 6};
    const Matrix at = a.transposed();
    CHECK(at.rows() == 3);
    CHECK(at(0, 1) == 4.0);
    const Matrix p = a * at;
    CHECK(p(0, 0) == doctest::Approx(14.0));
    CHECK(p(0, 1) == doctest::Approx(32.0));
    CHECK(p(1, 1) == doctest::Approx(77.0));
    CHECK_THROWS_AS(a * a, InvalidArgument);
}
