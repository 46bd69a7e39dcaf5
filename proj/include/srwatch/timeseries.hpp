#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace srwatch {

enum class Outcome { Survived, Died };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

/// A timestamped measurement stream for one subject.
struct MeasurementSeries {
  std::string series_id;
  std::vector<double> timestamps;  // hours, strictly increasing
  std::vector<double> values;
  std::optional<Outcome> label;

  std::size_t size() const noexcept { return values.size(); }

  /// Throws Validation on unequal lengths, non-finite values or
  /// non-increasing timestamps.
  void validate() const;
};

/// ARMA(p, q) fit by conditional least squares:
///   X_t = a0 + sum_i a_i X_{t-i} + sum_j b_j e_{t-j} + e_t.
struct ArmaFit {
  int p = 0;
  int q = 0;
  double a0 = 0;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  double sigma2 = 0;
  /// e_t for t = conditioning + 1..n.
  Eigen::VectorXd residuals;
  /// Number of leading observations the residuals are conditioned on.
  int conditioning = 0;
  double aic = 0;
  /// Set when the AR part is not stationary (for AR(1): |a_1| >= 1).
  bool nonstationary = false;

  int parameter_count() const noexcept { return p + q + 1; }
};

enum class TestName { Runs, LjungBox, ShapiroWilk, IntervalEffect };

std::string_view to_string(TestName name);

struct DiagnosticResult {
  TestName test;
  double statistic = 0;
  double p_value = 1;
  double level = 0.05;
  /// True when the null (independence, whiteness, normality, no gap
  /// effect) is not rejected at `level`.
  bool pass = true;
};

/// Interval-effect regression result; `diagnostic.statistic` is the t
/// statistic of c_1.
struct IntervalEffectResult {
  DiagnosticResult diagnostic;
  double c1 = 0;
  double std_error = 0;
};

// ---- model fitting -------------------------------------------------------

/// AR(1) by conditional least squares; residuals for t = 2..n.
ArmaFit fit_ar1(std::span<const double> values);

/// ARMA(p, q) by conditional least squares, conditioning on the first
/// `conditioning` observations (at least p). MA terms start at zero and are
/// optimized by Levenberg-Marquardt on the conditional sum of squares.
/// Throws NoModel when the optimizer fails or the fit is not stationary and
/// invertible.
ArmaFit fit_arma(std::span<const double> values, int p, int q, int conditioning);

struct ArmaGrid {
  int p_max = 2;
  int q_max = 2;
};

/// Minimum-AIC ARMA(p, q) over 0 <= p <= p_max, 0 <= q <= q_max. All
/// candidates are compared on the same conditioning window; the winner is
/// refitted on its own window. Ties go to smaller p + q, then smaller p.
ArmaFit select_arma_by_aic(std::span<const double> values, ArmaGrid grid = {});

/// Residuals of a frozen AR(1) model applied to a whole series, t = 2..n.
Eigen::VectorXd ar1_residuals(std::span<const double> values, double a0, double a1);

/// Mean of the residuals after a mean shift of delta*tau:
///   delta tau (1 - sum a) / (1 + sum b).
double residual_shift_mean(double delta, double tau, std::span<const double> ar, std::span<const double> ma);

// ---- diagnostics ---------------------------------------------------------

/// Regression of the series on its ARMA(p, q) terms plus the
/// gap t_i - t_{i-1}; tests c_1 = 0 with a t test.
IntervalEffectResult interval_effect_test(const MeasurementSeries& series, int p, int q, double level = 0.05);

/// Wald-Wolfowitz runs test about the median (values equal to the median are
/// dropped), normal approximation, two-sided.
DiagnosticResult runs_test(std::span<const double> values, double level = 0.05);

/// Ljung-Box portmanteau test with chi-square(max(h - fitted, 1)) reference.
DiagnosticResult ljung_box(std::span<const double> residuals, int lags, int fitted_parameters = 0,
                           double level = 0.05);

/// Default lag count: min(10, floor(n / 5)).
int default_ljung_box_lags(std::size_t n);

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
/// approximations, valid for 3 <= n <= 5000.
DiagnosticResult shapiro_wilk(std::span<const double> values, double level = 0.05);

struct StabilityOptions {
  ArmaGrid grid{1, 1};
  /// Max absolute AR/MA coefficient difference for two fits to count as
  /// similar.
  double tolerance = 0.15;
};

/// Smallest learning-period length m from `m_candidates` whose selected model
/// agrees in (p, q) and coefficients with the models selected on every prefix
/// length in `n_grid`. Returns nullopt when no candidate is stable.
std::optional<int> learning_period_stability(const MeasurementSeries& series, std::span<const int> m_candidates,
                                             std::span<const int> n_grid, const StabilityOptions& options = {});

}  // namespace srwatch
