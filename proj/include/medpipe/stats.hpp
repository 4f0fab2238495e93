#pragma once

#include <span>

namespace medpipe {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation. Valid for a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

// Two-tailed p-value of Student's t with df degrees of freedom:
// P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
double two_tailed_t_pvalue(double t, double df);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
};

// Pooled-variance two-sample t-test (equal variances assumed).
// Degenerate zero-variance inputs: equal means give t=0, p=1; unequal means
// give p=0 with t at +/-infinity.
TTestResult pooled_ttest(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);

}  // namespace medpipe
