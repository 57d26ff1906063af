#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scimet::stats {

struct PearsonResult {
    double r = 0.0;
    double t = 0.0;
    double p_value = 1.0;
    size_t n = 0;
};

// Sample Pearson correlation with a two-sided p-value from the t(n-2)
// distribution. Throws Precondition on n < 3 or a constant input.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);

// Population variance (divide by n).
double variance_population(std::span<const double> v);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a t statistic against t(df).
double t_two_sided_p(double t, double df);

// Quantile with linear interpolation over a sorted vector, q in [0, 1].
double percentile_sorted(std::span<const double> sorted, double q);

} // namespace scimet::stats
