#include "srwatch/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "srwatch/error.hpp"
#include "srwatch/stats.hpp"

namespace srwatch {

std::string_view to_string(Outcome outcome) { return outcome == Outcome::Died ? "died" : "survived"; }

std::optional<Outcome> parse_outcome(std::string_view text) {
  if (text == "died") return Outcome::Died;
  if (text == "survived") return Outcome::Survived;
  return std::nullopt;
}

std::string_view to_string(TestName name) {
  switch (name) {
    case TestName::Runs: return "runs";
    case TestName::LjungBox: return "ljung_box";
    case TestName::ShapiroWilk: return "shapiro_wilk";
    case TestName::IntervalEffect: return "interval_effect";
  }
  return "unknown";
}

void MeasurementSeries::validate() const {
  if (timestamps.size() != values.size())
    throw Error(ErrorCode::Validation, "series '" + series_id + "': timestamps and values differ in length");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(timestamps[i]))
      throw Error(ErrorCode::Validation, "series '" + series_id + "': non-finite entry at position " +
                                             std::to_string(i + 1));
    if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
      throw Error(ErrorCode::Validation, "series '" + series_id + "': timestamps not strictly increasing at position " +
                                             std::to_string(i + 1));
  }
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Parameter layout: [a0, a_1..a_p, b_1..b_q, (c1)].
struct CssModel {
  std::span<const double> x;
  int p;
  int q;
  int conditioning;
  const std::vector<double>* gaps = nullptr;  // gap regressor, aligned with x

  int parameters() const { return 1 + p + q + (gaps ? 1 : 0); }
  int residual_count() const { return static_cast<int>(x.size()) - conditioning; }

  void residuals(const VectorXd& theta, VectorXd& out) const {
    const int n = static_cast<int>(x.size());
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    out.resize(residual_count());
    for (int t = conditioning; t < n; ++t) {
      double pred = theta(0);
      for (int i = 1; i <= p; ++i) pred += theta(i) * x[static_cast<std::size_t>(t - i)];
      for (int j = 1; j <= q; ++j)
        if (t - j >= conditioning) pred += theta(p + j) * e[static_cast<std::size_t>(t - j)];
      if (gaps) pred += theta(1 + p + q) * (*gaps)[static_cast<std::size_t>(t)];
      e[static_cast<std::size_t>(t)] = x[static_cast<std::size_t>(t)] - pred;
      out(t - conditioning) = e[static_cast<std::size_t>(t)];
    }
  }
};

struct CssFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;

  const CssModel* model;
  int inputs() const { return model->parameters(); }
  int values() const { return model->residual_count(); }
  int operator()(const VectorXd& theta, VectorXd& fvec) const {
    model->residuals(theta, fvec);
    return 0;
  }
};

// Ordinary least squares on the autoregressive (and gap) columns.
struct OlsFit {
  VectorXd theta;
  MatrixXd design;
  VectorXd residuals;
  Eigen::Index rank;
};

OlsFit ols_start(const CssModel& model) {
  const int rows = model.residual_count();
  const int cols = 1 + model.p + (model.gaps ? 1 : 0);
  MatrixXd design(rows, cols);
  VectorXd target(rows);
  for (int r = 0; r < rows; ++r) {
    const int t = r + model.conditioning;
    design(r, 0) = 1.0;
    for (int i = 1; i <= model.p; ++i) design(r, i) = model.x[static_cast<std::size_t>(t - i)];
    if (model.gaps) design(r, cols - 1) = (*model.gaps)[static_cast<std::size_t>(t)];
    target(r) = model.x[static_cast<std::size_t>(t)];
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  OlsFit out;
  out.rank = qr.rank();
  out.theta = qr.solve(target);
  out.residuals = target - design * out.theta;
  out.design = std::move(design);
  return out;
}

// Eigenvalues of the companion matrix with first row `coef` all lie inside
// the unit circle.
bool roots_inside_unit_circle(const VectorXd& coef) {
  const Eigen::Index k = coef.size();
  if (k == 0) return true;
  if (k == 1) return std::abs(coef(0)) < 1.0;
  MatrixXd companion = MatrixXd::Zero(k, k);
  companion.row(0) = coef.transpose();
  for (Eigen::Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<MatrixXd> solver(companion, false);
  return (solver.eigenvalues().array().abs() < 1.0).all();
}

struct CssResult {
  VectorXd theta;
  VectorXd residuals;
  MatrixXd jacobian;  // d residual / d theta at the solution
};

CssResult fit_css(const CssModel& model) {
  if (model.residual_count() <= model.parameters())
    throw Error(ErrorCode::InsufficientData, "too few observations for the requested model");

  OlsFit start = ols_start(model);
  if (start.rank < start.design.cols())
    throw Error(model.gaps ? ErrorCode::Collinearity : ErrorCode::DegenerateInput,
                "regression design is rank deficient");

  VectorXd theta = VectorXd::Zero(model.parameters());
  theta(0) = start.theta(0);
  for (int i = 1; i <= model.p; ++i) theta(i) = start.theta(i);
  if (model.gaps) theta(1 + model.p + model.q) = start.theta(start.theta.size() - 1);

  CssResult out;
  if (model.q == 0) {
    out.theta = theta;
    out.residuals = start.residuals;
    out.jacobian = -start.design;
    return out;
  }

  CssFunctor functor{&model};
  Eigen::NumericalDiff<CssFunctor, Eigen::Central> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<CssFunctor, Eigen::Central>> lm(numdiff);
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(theta);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation || !theta.allFinite())
    throw Error(ErrorCode::NoModel, "conditional-sum-of-squares optimizer did not converge");

  out.theta = theta;
  model.residuals(theta, out.residuals);
  out.jacobian.resize(model.residual_count(), model.parameters());
  numdiff.df(theta, out.jacobian);
  return out;
}

double gaussian_aic(double rss, int n_eff, int p, int q) {
  const double sigma2 = rss / n_eff;
  return n_eff * (std::log(2 * std::numbers::pi * sigma2) + 1.0) + 2.0 * (p + q + 2);
}

ArmaFit make_fit(std::span<const double> values, int p, int q, int conditioning) {
  CssModel model{values, p, q, conditioning};
  CssResult css = fit_css(model);
  ArmaFit fit;
  fit.p = p;
  fit.q = q;
  fit.conditioning = conditioning;
  fit.a0 = css.theta(0);
  fit.a = css.theta.segment(1, p);
  fit.b = css.theta.segment(1 + p, q);
  fit.residuals = std::move(css.residuals);
  const int n_eff = static_cast<int>(fit.residuals.size());
  const double rss = fit.residuals.squaredNorm();
  fit.sigma2 = rss / n_eff;
  if (!(fit.sigma2 > 0)) throw Error(ErrorCode::DegenerateInput, "fitted model has zero innovation variance");
  fit.aic = gaussian_aic(rss, n_eff, p, q);
  fit.nonstationary = !roots_inside_unit_circle(fit.a);
  return fit;
}

void require_variation(std::span<const double> values) {
  for (const double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "series contains non-finite values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) throw Error(ErrorCode::DegenerateInput, "series has zero variance");
}

DiagnosticResult decide(TestName name, double statistic, double p_value, double level) {
  DiagnosticResult r;
  r.test = name;
  r.statistic = statistic;
  r.p_value = std::clamp(p_value, 0.0, 1.0);
  r.level = level;
  r.pass = r.p_value >= level;
  return r;
}

double poly(std::initializer_list<double> c, double x) {
  double result = 0;
  double power = 1;
  for (const double coef : c) {
    result += coef * power;
    power *= x;
  }
  return result;
}

}  // namespace

ArmaFit fit_ar1(std::span<const double> values) {
  if (values.size() < 10) throw Error(ErrorCode::InsufficientData, "AR(1) fit needs at least 10 values");
  require_variation(values);
  return make_fit(values, 1, 0, 1);
}

ArmaFit fit_arma(std::span<const double> values, int p, int q, int conditioning) {
  if (p < 0 || q < 0 || conditioning < p)
    throw Error(ErrorCode::InvalidParameter, "ARMA orders must be nonnegative and conditioning >= p");
  require_variation(values);
  ArmaFit fit = make_fit(values, p, q, conditioning);
  if (fit.nonstationary) throw Error(ErrorCode::NoModel, "fitted AR part is not stationary");
  if (!roots_inside_unit_circle(-fit.b)) throw Error(ErrorCode::NoModel, "fitted MA part is not invertible");
  return fit;
}

ArmaFit select_arma_by_aic(std::span<const double> values, ArmaGrid grid) {
  if (grid.p_max < 0 || grid.q_max < 0) throw Error(ErrorCode::InvalidParameter, "negative order bound");
  const std::size_t needed = 5 * static_cast<std::size_t>(grid.p_max + grid.q_max + 1);
  if (values.size() < needed)
    throw Error(ErrorCode::InsufficientData,
                "need at least " + std::to_string(needed) + " values for the requested order grid");
  require_variation(values);

  std::optional<ArmaFit> best;
  for (int p = 0; p <= grid.p_max; ++p) {
    for (int q = 0; q <= grid.q_max; ++q) {
      ArmaFit candidate;
      try {
        candidate = fit_arma(values, p, q, grid.p_max);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoModel || e.code() == ErrorCode::DegenerateInput) continue;
        throw;
      }
      if (!best) {
        best = std::move(candidate);
        continue;
      }
      const double tol = 1e-9 * std::max(1.0, std::abs(best->aic));
      const bool better = candidate.aic < best->aic - tol;
      const bool tied = std::abs(candidate.aic - best->aic) <= tol;
      const auto order = [](const ArmaFit& f) { return std::pair{f.p + f.q, f.p}; };
      if (better || (tied && order(candidate) < order(*best))) best = std::move(candidate);
    }
  }
  if (!best) throw Error(ErrorCode::NoModel, "no candidate ARMA model could be fitted");

  try {
    ArmaFit refit = fit_arma(values, best->p, best->q, best->p);
    refit.aic = best->aic;
    return refit;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoModel) throw;
    return *best;
  }
}

Eigen::VectorXd ar1_residuals(std::span<const double> values, double a0, double a1) {
  if (values.size() < 2) throw Error(ErrorCode::InsufficientData, "AR(1) residuals need two values");
  Eigen::VectorXd e(static_cast<Eigen::Index>(values.size() - 1));
  for (std::size_t t = 1; t < values.size(); ++t)
    e(static_cast<Eigen::Index>(t - 1)) = values[t] - a0 - a1 * values[t - 1];
  return e;
}

double residual_shift_mean(double delta, double tau, std::span<const double> ar, std::span<const double> ma) {
  double ar_sum = 0;
  for (const double a : ar) ar_sum += a;
  double ma_sum = 0;
  for (const double b : ma) ma_sum += b;
  if (!(1.0 - ar_sum > 0)) throw Error(ErrorCode::InvalidModel, "1 - sum(a) must be positive (stationarity)");
  if (1.0 + ma_sum == 0) throw Error(ErrorCode::InvalidModel, "1 + sum(b) must be nonzero");
  return delta * tau * (1.0 - ar_sum) / (1.0 + ma_sum);
}

IntervalEffectResult interval_effect_test(const MeasurementSeries& series, int p, int q, double level) {
  series.validate();
  if (p < 0 || q < 0) throw Error(ErrorCode::InvalidParameter, "ARMA orders must be nonnegative");
  const std::size_t n = series.size();
  if (n < static_cast<std::size_t>(p + q + 10))
    throw Error(ErrorCode::InsufficientData, "interval-effect test needs n >= p + q + 10");

  std::vector<double> gaps(n, 0.0);
  std::set<double> distinct;
  for (std::size_t i = 1; i < n; ++i) {
    gaps[i] = series.timestamps[i] - series.timestamps[i - 1];
    distinct.insert(gaps[i]);
  }
  if (distinct.size() < 2) throw Error(ErrorCode::Collinearity, "all gaps are equal; c_1 is not identifiable");
  require_variation(series.values);

  CssModel model{series.values, p, q, std::max(p, 1), &gaps};
  CssResult css = fit_css(model);
  const int n_eff = model.residual_count();
  const int k = model.parameters();
  const int df = n_eff - k;
  if (df < 1) throw Error(ErrorCode::InsufficientData, "no residual degrees of freedom");
  const double sigma2 = css.residuals.squaredNorm() / df;

  const MatrixXd info = css.jacobian.transpose() * css.jacobian;
  Eigen::FullPivLU<MatrixXd> lu(info);
  if (!lu.isInvertible()) throw Error(ErrorCode::Collinearity, "information matrix is singular");
  const MatrixXd cov = sigma2 * lu.inverse();

  IntervalEffectResult out;
  out.c1 = css.theta(k - 1);
  out.std_error = std::sqrt(std::max(cov(k - 1, k - 1), 0.0));
  const double t = out.std_error > 0 ? out.c1 / out.std_error : std::numeric_limits<double>::infinity();
  out.diagnostic = decide(TestName::IntervalEffect, t, stats::student_t_two_sided_p(t, df), level);
  return out;
}

DiagnosticResult runs_test(std::span<const double> values, double level) {
  if (values.size() < 10) throw Error(ErrorCode::InsufficientData, "runs test needs at least 10 values");
  require_variation(values);
  const double med = stats::median(values);

  std::vector<int> signs;
  signs.reserve(values.size());
  for (const double v : values)
    if (v != med) signs.push_back(v > med ? 1 : -1);
  const double above = static_cast<double>(std::count(signs.begin(), signs.end(), 1));
  const double below = static_cast<double>(signs.size()) - above;
  if (above < 1 || below < 1) throw Error(ErrorCode::DegenerateInput, "no values on one side of the median");

  double runs = 1;
  for (std::size_t i = 1; i < signs.size(); ++i)
    if (signs[i] != signs[i - 1]) runs += 1;
  const double total = above + below;
  const double mu = 2 * above * below / total + 1;
  const double var = 2 * above * below * (2 * above * below - total) / (total * total * (total - 1));
  if (!(var > 0)) throw Error(ErrorCode::DegenerateInput, "runs statistic has zero variance");
  const double z = (runs - mu) / std::sqrt(var);
  return decide(TestName::Runs, z, stats::normal_two_sided_p(z), level);
}

int default_ljung_box_lags(std::size_t n) { return static_cast<int>(std::min<std::size_t>(10, n / 5)); }

DiagnosticResult ljung_box(std::span<const double> residuals, int lags, int fitted_parameters, double level) {
  const std::size_t n = residuals.size();
  if (lags < 1 || 2 * static_cast<std::size_t>(lags) >= n)
    throw Error(ErrorCode::InvalidParameter, "Ljung-Box lag count must satisfy 1 <= h < n/2");
  const double m = stats::mean(residuals);
  double denom = 0;
  for (const double e : residuals) denom += (e - m) * (e - m);
  if (!(denom > 0)) throw Error(ErrorCode::DegenerateInput, "residuals have zero variance");

  const double nd = static_cast<double>(n);
  double q = 0;
  for (int k = 1; k <= lags; ++k) {
    double acf = 0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
      acf += (residuals[t] - m) * (residuals[t - static_cast<std::size_t>(k)] - m);
    acf /= denom;
    q += acf * acf / (nd - k);
  }
  q *= nd * (nd + 2);
  const double df = std::max(lags - fitted_parameters, 1);
  return decide(TestName::LjungBox, q, stats::chi_square_sf(q, df), level);
}

DiagnosticResult shapiro_wilk(std::span<const double> values, double level) {
  const std::size_t n = values.size();
  if (n < 3 || n > 5000) throw Error(ErrorCode::InvalidParameter, "Shapiro-Wilk needs 3 <= n <= 5000");
  require_variation(values);

  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double nd = static_cast<double>(n);

  // Antisymmetric coefficients for the ascending order statistics.
  std::vector<double> coef(n, 0.0);
  if (n == 3) {
    coef[0] = -std::numbers::sqrt2 / 2;
    coef[2] = std::numbers::sqrt2 / 2;
  } else {
    std::vector<double> m(n);
    double sum_m2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = stats::normal_quantile((static_cast<double>(i + 1) - 0.375) / (nd + 0.25));
      sum_m2 += m[i] * m[i];
    }
    const double root_sum = std::sqrt(sum_m2);
    const double rsn = 1.0 / std::sqrt(nd);
    const double a1 = poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn) + m[n - 1] / root_sum;
    std::size_t outer = 1;
    double fac;
    double a2 = 0;
    if (n > 5) {
      a2 = poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn) + m[n - 2] / root_sum;
      fac = std::sqrt((sum_m2 - 2 * m[n - 1] * m[n - 1] - 2 * m[n - 2] * m[n - 2]) / (1 - 2 * a1 * a1 - 2 * a2 * a2));
      outer = 2;
    } else {
      fac = std::sqrt((sum_m2 - 2 * m[n - 1] * m[n - 1]) / (1 - 2 * a1 * a1));
    }
    for (std::size_t i = 0; i < n; ++i) coef[i] = m[i] / fac;
    coef[n - 1] = a1;
    coef[0] = -a1;
    if (outer == 2) {
      coef[n - 2] = a2;
      coef[1] = -a2;
    }
  }

  const double mean = stats::mean(x);
  double ss = 0;
  double lin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ss += (x[i] - mean) * (x[i] - mean);
    lin += coef[i] * x[i];
  }
  const double w = std::min(lin * lin / ss, 1.0);

  double p_value;
  if (n == 3) {
    p_value = std::max(0.0, 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3));
  } else {
    double y = std::log1p(-w);
    double mu;
    double sigma;
    if (n <= 11) {
      const double gamma = poly({-2.273, 0.459}, nd);
      if (y >= gamma) return decide(TestName::ShapiroWilk, w, 1e-99, level);
      y = -std::log(gamma - y);
      mu = poly({0.5440, -0.39978, 0.025054, -6.714e-4}, nd);
      sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, nd));
    } else {
      const double ln_n = std::log(nd);
      mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, ln_n);
      sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, ln_n));
    }
    p_value = stats::normal_sf((y - mu) / sigma);
  }
  return decide(TestName::ShapiroWilk, w, p_value, level);
}

std::optional<int> learning_period_stability(const MeasurementSeries& series, std::span<const int> m_candidates,
                                             std::span<const int> n_grid, const StabilityOptions& options) {
  series.validate();
  if (m_candidates.empty() || n_grid.empty()) throw Error(ErrorCode::InvalidParameter, "empty candidate or grid list");
  if (!std::is_sorted(m_candidates.begin(), m_candidates.end()) || !std::is_sorted(n_grid.begin(), n_grid.end()))
    throw Error(ErrorCode::InvalidParameter, "candidate and grid lists must be ascending");
  const int longest = std::max(m_candidates.back(), n_grid.back());
  if (static_cast<std::size_t>(longest) > series.size())
    throw Error(ErrorCode::InsufficientData, "series shorter than the largest prefix length");

  std::map<int, std::optional<ArmaFit>> cache;
  const auto fit_prefix = [&](int length) -> const std::optional<ArmaFit>& {
    auto it = cache.find(length);
    if (it != cache.end()) return it->second;
    std::optional<ArmaFit> fit;
    try {
      fit = select_arma_by_aic(std::span(series.values).first(static_cast<std::size_t>(length)), options.grid);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoModel && e.code() != ErrorCode::DegenerateInput &&
          e.code() != ErrorCode::InsufficientData)
        throw;
    }
    return cache.emplace(length, std::move(fit)).first->second;
  };
  const auto similar = [&](const ArmaFit& x, const ArmaFit& y) {
    if (x.p != y.p || x.q != y.q) return false;
    const double da = x.p > 0 ? (x.a - y.a).cwiseAbs().maxCoeff() : 0.0;
    const double db = x.q > 0 ? (x.b - y.b).cwiseAbs().maxCoeff() : 0.0;
    return std::max(da, db) <= options.tolerance;
  };

  for (const int m : m_candidates) {
    const auto& reference = fit_prefix(m);
    if (!reference) continue;
    bool stable = true;
    for (const int length : n_grid) {
      const auto& other = fit_prefix(length);
      if (!other || !similar(*reference, *other)) {
        stable = false;
        break;
      }
    }
    if (stable) return m;
  }
  return std::nullopt;
}

}  // namespace srwatch
