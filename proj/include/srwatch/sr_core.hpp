#pragma once

// Invariant two-sided Shiryaev-Roberts statistic for a change in a normal
// mean when neither the pre-change mean nor the variance is known.
//
// Index conventions follow the math: observations are X_1..X_n, the
// recursive residuals and the scale-normalized sequence are defined for
// i = 2..n and are stored with `v(i - 2)` holding the value for index i.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srwatch/error.hpp"

namespace srwatch {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Terms whose likelihood ratio is provably below exp(kLogNegligible) are not
/// evaluated when screening is on. R_n >= 1 always, so the dropped mass is
/// below n * 1e-20 relative.
inline constexpr double kLogNegligible = -46.0517018598809136;  // log(1e-20)

/// Moment-recursion values above this are recomputed in the log domain.
inline constexpr double kOverflowGuard = 1e300;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorCode::InvalidInput, std::string(what) + " contains non-finite values");
}

}  // namespace detail

/// Y_i = (X_i - mean(X_1..X_{i-1})) * sqrt((i-1)/i) for i = 2..n.
template <typename Derived>
Vector<typename Derived::Scalar> recursive_residuals(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "recursive residuals need at least two observations");
  detail::require_finite(x, "observation sequence");

  Vector<Scalar> y(n - 1);
  Scalar running = x(0);
  for (Index i = 2; i <= n; ++i) {
    y(i - 2) = (x(i - 1) - running / Scalar(i - 1)) * std::sqrt(Scalar(i - 1) / Scalar(i));
    running += x(i - 1);
  }
  return y;
}

/// Z_i = Y_i / Y_2. Throws DegenerateNormalizer when Y_2 == 0.
template <typename Derived>
Vector<typename Derived::Scalar> scale_normalize(const Eigen::MatrixBase<Derived>& y) {
  if (y.size() < 1) throw Error(ErrorCode::InsufficientData, "empty residual sequence");
  if (y(0) == 0) throw Error(ErrorCode::DegenerateNormalizer, "Y_2 is zero (first two observations are tied)");
  return y / y(0);
}

/// Recursive residuals together with their scale-normalized form.
template <typename Scalar>
struct InvariantSequence {
  Vector<Scalar> y;
  Vector<Scalar> z;
  Scalar normalizer;
};

template <typename Derived>
InvariantSequence<typename Derived::Scalar> invariant_sequence(const Eigen::MatrixBase<Derived>& x) {
  auto y = recursive_residuals(x);
  auto z = scale_normalize(y);
  const auto normalizer = y(0);
  return {std::move(y), std::move(z), normalizer};
}

/// a_{k,n} = delta (k-1) sum_{i=k..n} Z_i / sqrt(i(i-1)) / sqrt(sum_{i=2..n} Z_i^2).
template <typename Derived>
typename Derived::Scalar a_coefficient(const Eigen::MatrixBase<Derived>& z, Index k, Index n,
                                       typename Derived::Scalar delta) {
  using Scalar = typename Derived::Scalar;
  if (k < 2 || k > n) throw Error(ErrorCode::InvalidParameter, "a_coefficient needs 2 <= k <= n");
  if (z.size() < n - 1) throw Error(ErrorCode::InsufficientData, "Z sequence shorter than n - 1");

  const Scalar norm = std::sqrt(z.head(n - 1).squaredNorm());
  if (norm == 0) throw Error(ErrorCode::DegenerateInput, "all Z_i are zero");
  Scalar tail = 0;
  for (Index i = k; i <= n; ++i) tail += z(i - 2) / std::sqrt(Scalar(i * (i - 1)));
  return delta * Scalar(k - 1) * tail / norm;
}

/// Normalized absolute moment ratio
///   E|T + a|^m / E|T|^m,  T ~ N(0, 1),
/// evaluated with the four-term (u, v, w, y) moment recursion for every
/// entry of `a` at once. This is the integral factor of the likelihood ratio
/// with m = n - 2. Entries may overflow to inf for extreme a and m; callers
/// handle that through the log-domain routes below.
template <typename Derived>
Array<typename Derived::Scalar> moment_ratio(const Eigen::ArrayBase<Derived>& a_in, Index m) {
  using Scalar = typename Derived::Scalar;
  using std::numbers::pi;
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "moment order must be >= 1");

  const Array<Scalar> a = a_in;
  const Scalar root_half_pi = std::sqrt(Scalar(pi) / 2);
  const Scalar root_two_over_pi = std::sqrt(2 / Scalar(pi));

  const Array<Scalar> p = (-a.square() / 2).exp() / 2;
  const Array<Scalar> q = a.unaryExpr([](Scalar v) { return std::erf(v / std::sqrt(Scalar(2))); }) / 2 + Scalar(0.5);

  // "older" holds order j-2, "newer" holds order j-1.
  Array<Scalar> u_new = p - a * (1 - q) * root_half_pi;
  Array<Scalar> v_new = p + a * q * root_half_pi;
  Array<Scalar> w_new = u_new * root_two_over_pi;
  Array<Scalar> y_new = v_new * root_two_over_pi;
  if (m == 1) return u_new + v_new;

  Array<Scalar> u_old = (1 - q) - a * w_new;
  Array<Scalar> v_old = q + a * y_new;
  Array<Scalar> w_old = (1 - q) * root_half_pi - a * u_new;
  Array<Scalar> y_old = q * root_half_pi + a * v_new;
  u_old.swap(u_new);
  v_old.swap(v_new);
  w_old.swap(w_new);
  y_old.swap(y_new);

  for (Index j = 3; j <= m; ++j) {
    const Scalar jm1 = Scalar(j - 1);
    const Scalar growth = jm1 / Scalar(j - 2);
    const Scalar inv_jm1 = 1 / jm1;
    u_old = u_old - a * w_new * inv_jm1;
    w_old = growth * w_old - a * u_new;
    v_old = v_old + a * y_new * inv_jm1;
    y_old = growth * y_old + a * v_new;
    u_old.swap(u_new);
    v_old.swap(v_new);
    w_old.swap(w_new);
    y_old.swap(y_new);
  }
  return u_new + v_new;
}

template <std::floating_point Scalar>
Scalar moment_ratio(Scalar a, Index m) {
  Array<Scalar> one(1);
  one(0) = a;
  return moment_ratio(one, m)(0);
}

/// log E|T + a|^m / E|T|^m by adaptive quadrature in the log domain. Used as
/// the fallback when the recursion leaves double range.
double log_moment_ratio_quadrature(double a, Index m);

/// log E|T + a|^m / E|T|^m from the confluent hypergeometric series
///   exp(-a^2/2) * sum_r a^{2r}/(2r)! * prod_{i=1..r} (m + 2i - 1),
/// summed with rescaling. Cheap when |a| sqrt(m) is moderate; used to screen
/// negligible terms before the recursion runs.
double log_moment_ratio_series(double a, Index m);

/// Exponent of the closed-form factor multiplying the moment ratio:
///   -0.5 delta^2 (k-1)^2 [1/(k-1) - 1/n] + 0.5 a^2.
template <std::floating_point Scalar>
Scalar likelihood_exponent(Scalar a, Index k, Index n, Scalar delta) {
  const Scalar km1 = Scalar(k - 1);
  return Scalar(-0.5) * delta * delta * km1 * km1 * (1 / km1 - 1 / Scalar(n)) + Scalar(0.5) * a * a;
}

/// Likelihood ratio of Z_3..Z_n for a change at k versus no change, for
/// 2 < k <= n. `z(i - 2)` holds Z_i.
template <typename Derived>
double likelihood_ratio(const Eigen::MatrixBase<Derived>& z, Index k, Index n, double delta) {
  if (n < 3) throw Error(ErrorCode::InsufficientData, "likelihood ratio needs n >= 3");
  if (k <= 2 || k > n) throw Error(ErrorCode::InvalidParameter, "likelihood ratio needs 2 < k <= n");
  const double a = static_cast<double>(a_coefficient(z, k, n, static_cast<typename Derived::Scalar>(delta)));
  const double exponent = likelihood_exponent(a, k, n, delta);
  const double ratio = moment_ratio(a, n - 2);
  if (std::isfinite(ratio) && ratio <= kOverflowGuard) return ratio * std::exp(exponent);

  const double log_value = log_moment_ratio_quadrature(a, n - 2) + exponent;
  if (!std::isfinite(log_value) || log_value > std::log(std::numeric_limits<double>::max()))
    throw Error(ErrorCode::NumericOverflow, "likelihood ratio exceeds double range");
  return std::exp(log_value);
}

struct SrOptions {
  /// Putative shift in pre-change standard deviations.
  double delta = 1.0;
  /// Skip terms whose likelihood ratio is provably below 1e-20.
  bool skip_negligible = true;
  /// On a tied start (Y_2 == 0) drop leading tied observations instead of
  /// throwing DegenerateNormalizer.
  bool restart_on_tied_start = false;
};

/// Streaming Shiryaev-Roberts monitor. Each push recomputes R_n over every
/// change hypothesis, as the reference program does (O(n^2) per step).
///
/// R_1 = 1, R_2 = 2 and, for n >= 3,
///   R_n = 1 + t_2 + sum_{k=3..n} Lambda_k^n,
/// where t_2 is the k = 2 term of the same formula scaled by
/// exp(-delta^2 / 4) once per hypothesis evaluated at that step.
///
/// The monitor is a plain value: it can be copied or moved between threads.
class SrMonitor {
 public:
  explicit SrMonitor(SrOptions options = {});

  /// Appends one observation and returns the statistic at that position.
  double push(double x);

  Index size() const noexcept { return static_cast<Index>(statistics_.size()); }
  /// Leading tied observations dropped by the tied-start restart.
  Index dropped() const noexcept { return dropped_; }
  const std::vector<double>& statistics() const noexcept { return statistics_; }
  const SrOptions& options() const noexcept { return options_; }

 private:
  double evaluate();

  SrOptions options_;
  Index retained_ = 0;
  std::vector<double> residuals_;  // Y_2.. of the retained window
  double running_sum_ = 0;
  Index dropped_ = 0;
  std::vector<double> statistics_;

  // scratch, reused between pushes
  std::vector<double> suffix_;
  std::vector<double> a_;
  std::vector<double> exponent_;
  std::vector<double> terms_;
  std::vector<Index> kept_;
};

/// R_1..R_n for a whole series.
Vector<double> sr_sequence(const Eigen::Ref<const Vector<double>>& x, const SrOptions& options = {});

/// Result of the tied-start-tolerant evaluation.
struct SrTrajectory {
  Vector<double> statistics;
  /// Number of leading observations dropped because the series began with
  /// ties; their positions carry R = 1.
  Index dropped = 0;
};

SrTrajectory sr_sequence_restarting(const Eigen::Ref<const Vector<double>>& x, SrOptions options = {});

/// First 1-based n with R_n >= threshold, if any.
template <typename Derived>
std::optional<Index> stopping_time(const Eigen::DenseBase<Derived>& statistics, double threshold) {
  if (!(threshold > 0)) throw Error(ErrorCode::InvalidThreshold, "threshold must be positive");
  for (Index i = 0; i < statistics.size(); ++i)
    if (statistics(i) >= threshold) return i + 1;
  return std::nullopt;
}

}  // namespace srwatch
