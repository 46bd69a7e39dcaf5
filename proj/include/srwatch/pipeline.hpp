#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "srwatch/calibration.hpp"
#include "srwatch/simulation.hpp"
#include "srwatch/timeseries.hpp"

namespace srwatch {

struct MonitorConfig {
  int m = 40;
  double delta = 1;
  double threshold_independent = 674;
  double threshold_dependent = 101;
  double significance_level = 0.05;
  std::vector<double> alpha_weights{0.5, 0.6, 0.7, 0.8, 0.9};
  /// Keep computing R after the first alarm instead of stopping there.
  bool continue_after_alarm = false;
  /// Ljung-Box lag count for residual validation; 0 picks min(10, n/5).
  int ljung_box_lags = 0;

  void validate() const;
};

/// Flat `key = value` text; '#' starts a comment. Unknown keys are errors.
MonitorConfig parse_monitor_config(std::istream& in);
MonitorConfig load_monitor_config(const std::filesystem::path& path);

/// Simulation config in the same `key = value` format. The presence of
/// `series_count` selects a labeled cohort; otherwise one series is made.
using SimulationConfig = std::variant<ChangePointConfig, CohortConfig>;
SimulationConfig parse_simulation_config(std::istream& in);
SimulationConfig load_simulation_config(const std::filesystem::path& path);
std::vector<MeasurementSeries> run_simulation(const SimulationConfig& config);

enum class Branch { Learning, Independent, Ar1Residuals, NonnormalFlagged };

std::string_view to_string(Branch branch);

struct ChartPoint {
  long index = 0;        // position in the monitored sequence, from 1
  long observation = 0;  // position in the original series
  double statistic = 0;
};

struct MonitoringReport {
  std::string series_id;
  std::optional<Outcome> label;
  long length = 0;
  Branch branch = Branch::Learning;
  /// AR(1) fitted on the learning period (dependent branch only).
  std::optional<ArmaFit> model;
  double threshold = 0;
  std::vector<ChartPoint> chart;
  /// First alarm, as a chart index and as an observation index.
  std::optional<long> alarm_index;
  std::optional<long> alarm_observation;
  /// Every chart index with R >= threshold when monitoring continues past
  /// the first alarm.
  std::vector<long> alarm_indices;
  bool stopped_at_alarm = false;
  /// Leading observations discarded because they tied the first value.
  long dropped = 0;
  std::vector<DiagnosticResult> diagnostics;
  std::optional<IntervalEffectResult> interval_effect;
  std::vector<std::string> warnings;
  std::string status;

  /// max R over the chart, the calibration test variable.
  std::optional<double> max_statistic() const;
};

MonitoringReport monitor_series(const MeasurementSeries& series, const MonitorConfig& config);

struct AlphaSelection {
  double alpha = 0;
  std::optional<ThresholdChoice> choice;
  std::string error;
};

struct BranchCalibration {
  Branch branch = Branch::Independent;
  std::vector<std::string> series_ids;
  std::vector<LabeledScore> scores;
  std::optional<RocTable> roc;
  std::vector<AlphaSelection> selections;
  /// Set when the ROC table could not be built (e.g. one class only).
  std::string error;
};

struct CalibrationReport {
  std::vector<MonitoringReport> series;
  std::vector<BranchCalibration> branches;
  std::vector<std::string> warnings;
};

/// Monitors every labeled series over its full length, scores each by its
/// max R_n and builds one ROC table per monitored branch.
CalibrationReport cohort_calibrate(const std::vector<MeasurementSeries>& cohort, const MonitorConfig& config);

/// Threshold choices for every alpha on a ready-made ROC table.
std::vector<AlphaSelection> select_thresholds(const RocTable& roc, const std::vector<double>& alphas);

// ---- CSV -------------------------------------------------------------------

/// Reads `series_id,timestamp_hours,value[,label]` rows. Series keep their
/// order of first appearance.
std::vector<MeasurementSeries> ingest_csv(std::istream& in, std::string_view source = "<input>");
std::vector<MeasurementSeries> ingest_csv(const std::filesystem::path& path);

/// Canonical form: four-column header, shortest round-trip numbers, LF.
void emit_csv(std::ostream& out, const std::vector<MeasurementSeries>& series);
void emit_csv(const std::filesystem::path& path, const std::vector<MeasurementSeries>& series);

// ---- reports ---------------------------------------------------------------

/// Writes report.txt, report.json, charts/<id>.csv and plots/<id>.svg.
void emit_report(const std::vector<MonitoringReport>& reports, const MonitorConfig& config,
                 const std::filesystem::path& out_dir);

/// Writes calibration.txt, calibration.json, scores.csv, roc_<branch>.tsv and
/// the ROC and g-curve plots.
void emit_report(const CalibrationReport& report, const MonitorConfig& config, const std::filesystem::path& out_dir);

/// ROC table in the fixture format read by read_roc_table.
void write_roc_table(std::ostream& out, const RocTable& roc);

// ---- plots -----------------------------------------------------------------

std::string control_chart_svg(const MonitoringReport& report, int learning_period);
std::string roc_curve_svg(const std::vector<std::pair<std::string, const RocTable*>>& curves, std::string_view title);
std::string g_curve_svg(const RocTable& roc, const std::vector<AlphaSelection>& selections, std::string_view title);

}  // namespace srwatch
