#include "srwatch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "srwatch/error.hpp"
#include "srwatch/sr_core.hpp"

namespace srwatch {

namespace {

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool uneven_gaps(std::span<const double> timestamps) {
  std::set<double> gaps;
  for (std::size_t i = 1; i < timestamps.size(); ++i) gaps.insert(timestamps[i] - timestamps[i - 1]);
  return gaps.size() >= 2;
}

MonitoringReport excluded(MonitoringReport report, std::string why) {
  report.branch = Branch::NonnormalFlagged;
  report.status = "excluded from monitoring: " + std::move(why);
  return report;
}

}  // namespace

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::Learning: return "learning";
    case Branch::Independent: return "independent";
    case Branch::Ar1Residuals: return "ar1_residuals";
    case Branch::NonnormalFlagged: return "nonnormal_flagged";
  }
  return "unknown";
}

std::optional<double> MonitoringReport::max_statistic() const {
  if (chart.empty()) return std::nullopt;
  double best = chart.front().statistic;
  for (const auto& p : chart) best = std::max(best, p.statistic);
  return best;
}

MonitoringReport monitor_series(const MeasurementSeries& series, const MonitorConfig& config) {
  series.validate();
  config.validate();

  MonitoringReport report;
  report.series_id = series.series_id;
  report.label = series.label;
  report.length = static_cast<long>(series.size());

  const auto m = static_cast<std::size_t>(config.m);
  if (series.size() < m) {
    report.branch = Branch::Learning;
    report.status = "learning period: " + std::to_string(series.size()) + " of " + std::to_string(config.m) +
                    " observations, no decision";
    return report;
  }
  const std::span<const double> learning(series.values.data(), m);
  const double level = config.significance_level;

  if (uneven_gaps(std::span(series.timestamps).first(m))) {
    MeasurementSeries head;
    head.series_id = series.series_id;
    head.timestamps.assign(series.timestamps.begin(), series.timestamps.begin() + config.m);
    head.values.assign(learning.begin(), learning.end());
    try {
      report.interval_effect = interval_effect_test(head, 1, 0, level);
      report.diagnostics.push_back(report.interval_effect->diagnostic);
      if (!report.interval_effect->diagnostic.pass)
        report.warnings.push_back("measurement gaps have a significant effect (c1 = " +
                                  general(report.interval_effect->c1) +
                                  ", p = " + general(report.interval_effect->diagnostic.p_value) +
                                  "); monitoring proceeds unadjusted");
    } catch (const Error& e) {
      if (e.is_numeric()) throw;
      report.warnings.push_back(std::string("interval-effect test skipped: ") + e.what());
    }
  }

  DiagnosticResult runs;
  try {
    runs = runs_test(learning, level);
  } catch (const Error& e) {
    if (e.is_numeric()) throw;
    return excluded(std::move(report), std::string("runs test on the learning period failed: ") + e.what());
  }
  report.diagnostics.push_back(runs);

  std::vector<double> monitored;
  long offset = 0;  // observation index = chart index + offset
  if (runs.pass) {
    report.branch = Branch::Independent;
    report.threshold = config.threshold_independent;
    monitored = series.values;
  } else {
    ArmaFit fit;
    try {
      fit = fit_ar1(learning);
    } catch (const Error& e) {
      if (e.is_numeric()) throw;
      return excluded(std::move(report), std::string("AR(1) fit on the learning period failed: ") + e.what());
    }
    report.model = fit;
    if (fit.nonstationary)
      return excluded(std::move(report), "AR(1) fit on the learning period is not stationary (a1 = " +
                                             general(fit.a(0)) + ")");
    const std::span<const double> resid(fit.residuals.data(), static_cast<std::size_t>(fit.residuals.size()));
    const DiagnosticResult normality = shapiro_wilk(resid, level);
    report.diagnostics.push_back(normality);
    if (!normality.pass)
      return excluded(std::move(report), "learning-period residuals are not normal (Shapiro-Wilk p = " +
                                             general(normality.p_value) +
                                             "); the nonparametric alternative is not implemented");
    const int lags = config.ljung_box_lags > 0 ? config.ljung_box_lags : default_ljung_box_lags(resid.size());
    try {
      report.diagnostics.push_back(ljung_box(resid, lags, 1, level));
      report.diagnostics.push_back(runs_test(resid, level));
    } catch (const Error& e) {
      if (e.is_numeric()) throw;
      report.warnings.push_back(std::string("residual validation skipped: ") + e.what());
    }
    for (std::size_t i = 2; i < report.diagnostics.size(); ++i)
      if (!report.diagnostics[i].pass)
        report.warnings.push_back(std::string("residuals fail the ") +
                                  std::string(to_string(report.diagnostics[i].test)) + " check (p = " +
                                  general(report.diagnostics[i].p_value) + ")");

    report.branch = Branch::Ar1Residuals;
    report.threshold = config.threshold_dependent;
    const Eigen::VectorXd e = ar1_residuals(series.values, fit.a0, fit.a(0));
    monitored.assign(e.data(), e.data() + e.size());
    offset = 1;
  }

  // The learning period ends at observation m; its decision uses the max.
  const long decision = config.m - offset;
  SrOptions options;
  options.delta = config.delta;
  options.restart_on_tied_start = true;
  SrMonitor monitor(options);
  double running_max = 0;
  for (std::size_t i = 0; i < monitored.size(); ++i) {
    const long index = static_cast<long>(i) + 1;
    const double r = monitor.push(monitored[i]);
    running_max = std::max(running_max, r);
    report.chart.push_back({index, index + offset, r});
    if (index < decision) continue;
    const bool crossed = (index == decision ? running_max : r) >= report.threshold;
    if (!crossed) continue;
    report.alarm_indices.push_back(index);
    if (!report.alarm_index) {
      report.alarm_index = index;
      report.alarm_observation = index + offset;
    }
    if (!config.continue_after_alarm) {
      report.stopped_at_alarm = index < static_cast<long>(monitored.size());
      break;
    }
  }
  report.dropped = static_cast<long>(monitor.dropped());
  if (report.dropped > 0)
    report.warnings.push_back(std::to_string(report.dropped) +
                              " leading value(s) tied the first; the invariant sequence restarted after them");

  if (report.alarm_index) {
    report.status = "alarm at observation " + std::to_string(*report.alarm_observation) + " (R = " +
                    general(report.chart[static_cast<std::size_t>(*report.alarm_index - 1)].statistic) +
                    ", threshold " + general(report.threshold) + ")";
    if (report.stopped_at_alarm) report.status += "; monitoring stopped";
    if (config.continue_after_alarm && report.alarm_indices.size() > 1)
      report.status += "; " + std::to_string(report.alarm_indices.size()) + " points at or above threshold";
  } else {
    report.status = "no alarm; max R = " + general(running_max) + " below threshold " + general(report.threshold);
  }
  return report;
}

std::vector<AlphaSelection> select_thresholds(const RocTable& roc, const std::vector<double>& alphas) {
  std::vector<AlphaSelection> out;
  for (const double alpha : alphas) {
    AlphaSelection s;
    s.alpha = alpha;
    try {
      s.choice = select_threshold(roc, alpha);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoAdmissibleThreshold) throw;
      s.error = e.what();
    }
    out.push_back(std::move(s));
  }
  return out;
}

CalibrationReport cohort_calibrate(const std::vector<MeasurementSeries>& cohort, const MonitorConfig& config) {
  config.validate();
  std::vector<const MeasurementSeries*> ordered;
  for (const auto& s : cohort) {
    if (!s.label) throw Error(ErrorCode::Validation, "series '" + s.series_id + "' has no outcome label");
    ordered.push_back(&s);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->series_id < b->series_id; });

  MonitorConfig full = config;
  full.continue_after_alarm = true;
  CalibrationReport out;
  for (const auto* s : ordered) out.series.push_back(monitor_series(*s, full));

  for (const Branch branch : {Branch::Independent, Branch::Ar1Residuals}) {
    BranchCalibration bc;
    bc.branch = branch;
    for (const auto& r : out.series) {
      if (r.branch != branch) continue;
      const auto score = r.max_statistic();
      if (!score) continue;
      bc.series_ids.push_back(r.series_id);
      bc.scores.push_back({*score, *r.label});
    }
    if (bc.scores.empty()) {
      out.warnings.push_back("branch " + std::string(to_string(branch)) + " has no series; omitted");
      continue;
    }
    try {
      bc.roc = roc_table(bc.scores);
      bc.selections = select_thresholds(*bc.roc, config.alpha_weights);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidInput) throw;
      bc.error = e.what();
    }
    out.branches.push_back(std::move(bc));
  }

  long learning = 0;
  long flagged = 0;
  for (const auto& r : out.series) {
    learning += r.branch == Branch::Learning;
    flagged += r.branch == Branch::NonnormalFlagged;
  }
  if (learning > 0)
    out.warnings.push_back(std::to_string(learning) + " series shorter than the learning period were not scored");
  if (flagged > 0)
    out.warnings.push_back(std::to_string(flagged) + " series were flagged and excluded from the ROC analysis");
  return out;
}

}  // namespace srwatch
