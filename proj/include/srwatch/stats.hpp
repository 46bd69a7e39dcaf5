#pragma once

#include <span>

namespace srwatch::stats {

double normal_cdf(double z);
/// Upper tail 1 - Phi(z), accurate far into the tail.
double normal_sf(double z);
/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);
double normal_quantile(double p);

/// P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);
/// Two-sided p-value of a Student t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Asymptotic Kolmogorov distribution tail P(K > lambda).
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic;
  double p_value;
};

/// One-sample Kolmogorov-Smirnov test of `sample` against an exponential
/// distribution with the given mean. P-value from the asymptotic law with
/// Stephens' small-sample correction.
KsResult ks_exponential(std::span<const double> sample, double mean);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
double median(std::span<const double> x);

}  // namespace srwatch::stats
