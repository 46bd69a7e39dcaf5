#include "srwatch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/SpecialFunctions>

#include "srwatch/error.hpp"

namespace srwatch::stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_two_sided_p(double z) { return std::min(1.0, 2.0 * normal_sf(std::abs(z))); }

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw Error(ErrorCode::InvalidParameter, "normal quantile needs 0 < p < 1");
  return Eigen::numext::ndtri(p);
}

double chi_square_sf(double x, double df) {
  if (!(df > 0)) throw Error(ErrorCode::InvalidParameter, "chi-square degrees of freedom must be positive");
  if (x <= 0) return 1.0;
  return Eigen::numext::igammac(0.5 * df, 0.5 * x);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw Error(ErrorCode::InvalidParameter, "t degrees of freedom must be positive");
  if (!std::isfinite(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(Eigen::numext::betainc(0.5 * df, 0.5, x), 0.0, 1.0);
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_exponential(std::span<const double> sample, double mean_value) {
  if (sample.empty()) throw Error(ErrorCode::InsufficientData, "KS test on an empty sample");
  if (!(mean_value > 0)) throw Error(ErrorCode::InvalidParameter, "exponential mean must be positive");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  double d = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double cdf = -std::expm1(-sorted[i] / mean_value);
    const double below = static_cast<double>(i) / n;
    const double through = static_cast<double>(j) / n;
    d = std::max({d, std::abs(through - cdf), std::abs(cdf - below)});
    i = j;
  }
  const double root_n = std::sqrt(n);
  return {d, kolmogorov_sf((root_n + 0.12 + 0.11 / root_n) * d)};
}

double mean(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::InsufficientData, "mean of an empty sample");
  double s = 0;
  for (const double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw Error(ErrorCode::InsufficientData, "variance needs two values");
  const double m = mean(x);
  double s = 0;
  for (const double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double median(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::InsufficientData, "median of an empty sample");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace srwatch::stats
