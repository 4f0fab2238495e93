#include "medpipe/stats.hpp"

#include <cmath>
#include <limits>

#include "medpipe/errors.hpp"

namespace medpipe {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw InvalidArgument("incomplete beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double two_tailed_t_pvalue(double t, double df) {
    if (!(df > 0.0)) throw InvalidArgument("t p-value: df must be positive");
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(0.5 * df, 0.5, x);
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

TTestResult pooled_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw InvalidArgument("pooled t-test: each group needs at least 2 samples");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double df = na + nb - 2.0;
    const double pooled =
        ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / df;

    TTestResult r;
    if (pooled <= 0.0) {
        if (ma == mb) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = (ma > mb ? 1.0 : -1.0) * std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    r.p = two_tailed_t_pvalue(r.t, df);
    return r;
}

}  // namespace medpipe
