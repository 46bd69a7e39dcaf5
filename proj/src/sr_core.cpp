#include "srwatch/sr_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "srwatch/quadrature.hpp"

namespace srwatch {

namespace {

// log of  int |t|^m exp(-t^2/2) dt  =  2^{(m+1)/2} Gamma((m+1)/2).
double log_central_moment_integral(Index m) {
  const double h = 0.5 * static_cast<double>(m + 1);
  return h * std::numbers::ln2 + std::lgamma(h);
}

}  // namespace

double log_moment_ratio_quadrature(double a, Index m) {
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "moment order must be >= 1");
  const double md = static_cast<double>(m);

  // In s = t + a the integrand is |s|^m exp(-(s - a)^2 / 2), which peaks at
  // the roots of s^2 - a s - m = 0, one on each side of zero.
  const double disc = std::sqrt(a * a + 4 * md);
  const double s_lo = 0.5 * (a - disc);
  const double s_hi = 0.5 * (a + disc);
  auto log_integrand = [&](double s) {
    return md * std::log(std::abs(s)) - 0.5 * (s - a) * (s - a);
  };
  const double peak = std::max(log_integrand(s_lo), log_integrand(s_hi));

  auto scaled = [&](double s) { return s == 0 ? 0.0 : std::exp(log_integrand(s) - peak); };
  // Both log-integrand branches are concave with curvature <= -1, so 40
  // units past each peak the integrand is below exp(-800) of its maximum.
  const double width = 40.0;
  const auto result = quadrature::integrate<double>(scaled, s_lo - width, s_hi + width, 0.0, 1e-13,
                                                    {s_lo, 0.0, s_hi}, 20000);
  if (!(result.value > 0)) throw Error(ErrorCode::NumericOverflow, "log-domain quadrature failed");
  return std::log(result.value) + peak - log_central_moment_integral(m);
}

double log_moment_ratio_series(double a, Index m) {
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "moment order must be >= 1");
  const double z = a * a;
  if (z == 0) return 0.0;

  constexpr double kRescale = 1e250;
  const double log_rescale = std::log(kRescale);
  const double md = static_cast<double>(m);
  double term = 1.0;
  double sum = 1.0;
  double log_offset = 0.0;
  for (Index r = 0;; ++r) {
    const double rd = static_cast<double>(r);
    const double rho = z * (md + 2 * rd + 1) / ((2 * rd + 1) * (2 * rd + 2));
    term *= rho;
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_offset += log_rescale;
    }
    // The term ratio is decreasing in r, so once it drops below one the
    // remaining tail is bounded by a geometric series.
    const double next = z * (md + 2 * rd + 3) / ((2 * rd + 3) * (2 * rd + 4));
    if (next < 1 && term * next / (1 - next) < 1e-17 * sum) break;
  }
  return std::log(sum) + log_offset - 0.5 * z;
}

SrMonitor::SrMonitor(SrOptions options) : options_(options) {
  if (!std::isfinite(options_.delta) || options_.delta == 0)
    throw Error(ErrorCode::InvalidParameter, "delta must be finite and nonzero");
}

double SrMonitor::push(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidInput, "observation is not finite");

  double statistic = 1.0;
  const Index retained = retained_;
  if (retained == 0) {
    ++retained_;
    running_sum_ = x;
  } else if (retained == 1 && options_.restart_on_tied_start && x == running_sum_) {
    // Tied start: the earlier value is dropped and this one takes its place.
    ++dropped_;
  } else {
    const double i = static_cast<double>(retained + 1);
    if (retained >= 2 && residuals_.front() == 0)
      throw Error(ErrorCode::DegenerateNormalizer, "Y_2 is zero (first two observations are tied)");
    residuals_.push_back((x - running_sum_ / (i - 1)) * std::sqrt((i - 1) / i));
    running_sum_ += x;
    ++retained_;
    statistic = retained == 1 ? 2.0 : evaluate();
  }
  statistics_.push_back(statistic);
  return statistic;
}

double SrMonitor::evaluate() {
  const Index n = static_cast<Index>(residuals_.size()) + 1;
  const Index m = n - 2;
  const double delta = options_.delta;
  const double nd = static_cast<double>(n);

  double sum_squares = 0;
  for (const double y : residuals_) sum_squares += y * y;
  const double s = std::sqrt(sum_squares);

  suffix_.assign(static_cast<std::size_t>(n + 1), 0.0);
  double acc = 0;
  for (Index i = n; i >= 2; --i) {
    acc += residuals_[static_cast<std::size_t>(i - 2)] / std::sqrt(static_cast<double>(i * (i - 1)));
    suffix_[static_cast<std::size_t>(i)] = acc;
  }

  a_.assign(static_cast<std::size_t>(n + 1), 0.0);
  exponent_.assign(static_cast<std::size_t>(n + 1), 0.0);
  terms_.assign(static_cast<std::size_t>(n + 1), 0.0);
  kept_.clear();
  const double md = static_cast<double>(m);
  // (E|T|^m)^{1/m} for T ~ N(0, 1).
  const double moment_norm =
      std::exp((log_central_moment_integral(m) - 0.5 * std::log(2 * std::numbers::pi)) / md);
  for (Index k = 2; k <= n; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double km1 = static_cast<double>(k - 1);
    const double ratio_w = suffix_[ks] / s;
    a_[ks] = ((delta / s) * km1) * suffix_[ks];
    exponent_[ks] = (-0.5 * ((delta * km1) * (delta * km1))) * ((1 / km1) - (1 / nd) - ratio_w * ratio_w);
    if (options_.skip_negligible && exponent_[ks] < kLogNegligible) {
      // Minkowski: (E|T+a|^m)^{1/m} <= (E|T|^m)^{1/m} + |a|, a cheap upper
      // bound that settles most far-from-n hypotheses; the exact series
      // decides the rest.
      const double bound = md * std::log1p(std::abs(a_[ks]) / moment_norm) + exponent_[ks];
      if (bound < kLogNegligible) continue;
      if (log_moment_ratio_series(a_[ks], m) + exponent_[ks] < kLogNegligible) continue;
    }
    kept_.push_back(k);
  }

  if (!kept_.empty()) {
    Array<double> a(static_cast<Index>(kept_.size()));
    for (std::size_t j = 0; j < kept_.size(); ++j) a(static_cast<Index>(j)) = a_[static_cast<std::size_t>(kept_[j])];
    const Array<double> ratio = moment_ratio(a, m);
    for (std::size_t j = 0; j < kept_.size(); ++j) {
      const auto ks = static_cast<std::size_t>(kept_[j]);
      const double r = ratio(static_cast<Index>(j));
      const double e = exponent_[ks];
      double term;
      if (std::isfinite(r) && r > 0 && r <= kOverflowGuard) {
        term = e < -700 ? std::exp(std::log(r) + e) : r * std::exp(e);
      } else {
        term = std::exp(log_moment_ratio_quadrature(a_[ks], m) + e);
      }
      if (!std::isfinite(term)) throw Error(ErrorCode::NumericOverflow, "likelihood ratio exceeds double range");
      terms_[ks] = term;
    }
  }

  // The k = 2 term picks up exp(-delta^2 / 4) once per hypothesis pass.
  const double damping = std::exp(-0.25 * (delta * delta));
  for (Index k = 2; k <= n; ++k) terms_[2] *= damping;

  double total = 1.0;
  for (Index k = 2; k <= n; ++k) total += terms_[static_cast<std::size_t>(k)];
  if (!std::isfinite(total)) throw Error(ErrorCode::NumericOverflow, "statistic exceeds double range");
  return total;
}

Vector<double> sr_sequence(const Eigen::Ref<const Vector<double>>& x, const SrOptions& options) {
  if (x.size() == 0) throw Error(ErrorCode::InsufficientData, "SR sequence needs at least one observation");
  SrOptions strict = options;
  strict.restart_on_tied_start = false;
  SrMonitor monitor(strict);
  Vector<double> out(x.size());
  for (Index i = 0; i < x.size(); ++i) out(i) = monitor.push(x(i));
  return out;
}

SrTrajectory sr_sequence_restarting(const Eigen::Ref<const Vector<double>>& x, SrOptions options) {
  if (x.size() == 0) throw Error(ErrorCode::InsufficientData, "SR sequence needs at least one observation");
  options.restart_on_tied_start = true;
  SrMonitor monitor(options);
  SrTrajectory out;
  out.statistics.resize(x.size());
  for (Index i = 0; i < x.size(); ++i) out.statistics(i) = monitor.push(x(i));
  out.dropped = monitor.dropped();
  return out;
}

}  // namespace srwatch
