#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srwatch/timeseries.hpp"

namespace srwatch {

/// Per-series test variable (max over n of R_n) with its outcome.
struct LabeledScore {
  double score = 1;
  Outcome label = Outcome::Survived;
};

struct RocRow {
  double cutoff = 0;
  double sensitivity = 0;
  double false_positive_rate = 0;

  double specificity() const { return 1.0 - false_positive_rate; }
};

struct AucSummary {
  double auc = 0.5;
  double se = 0;
  double p_value = 1;
  double ci_lower = 0;
  double ci_upper = 1;
};

struct RocTable {
  std::vector<RocRow> rows;
  AucSummary auc;
  int n_died = 0;
  int n_survived = 0;
};

/// ROC coordinates with "positive if score >= cutoff". Cutoffs are the
/// minimum score minus one, the midpoints of consecutive distinct ordered
/// scores, and the maximum score plus one.
RocTable roc_table(std::span<const LabeledScore> scores);

/// Mann-Whitney AUC (ties count one half), Hanley-McNeil standard error,
/// two-sided normal p-value against 0.5 and AUC +- 1.96 SE.
AucSummary auc_with_se(std::span<const LabeledScore> scores);

/// Hanley-McNeil (1982) standard error of an AUC estimate.
double hanley_mcneil_se(double auc, int n_positive, int n_negative);

/// g(A, alpha) = alpha * sensitivity + (1 - alpha) * specificity.
double weighted_score(double sensitivity, double specificity, double alpha);

struct ThresholdChoice {
  double threshold = 0;
  double sensitivity = 0;
  double specificity = 0;
  double score = 0;
};

/// Cutoff maximizing g(A, alpha) among rows with sensitivity > specificity;
/// ties go to the larger cutoff.
ThresholdChoice select_threshold(const RocTable& roc, double alpha);

/// ROC coordinate table in the shipped fixture format: tab- or
/// whitespace-separated `cutoff sensitivity one_minus_specificity` rows;
/// lines starting with '#' carry `key value` metadata (n_died, n_survived,
/// auc, auc_se, auc_p, ci_lower, ci_upper).
RocTable read_roc_table(const std::filesystem::path& path);

struct ArlEstimate {
  double arl = 0;
  double standard_error = 0;
  int reps = 0;
  double threshold = 0;
  double delta = 1;
  /// Replications that hit the horizon before alarming.
  int censored = 0;
  long horizon = 0;
  std::vector<long> run_lengths;  // observed, censored ones at the horizon

  double censored_fraction() const { return reps ? static_cast<double>(censored) / reps : 0.0; }
};

/// Monte Carlo average run length to false alarm under no change. Each
/// replication draws i.i.d. standard normals from its own derived seed and
/// runs the monitor until R_n >= threshold or `horizon` observations.
/// Censored runs are extrapolated with the exponential tail (the estimate is
/// the censored-exponential MLE: total observed length / alarms).
/// `horizon` <= 0 selects max(100, 10 * threshold).
ArlEstimate arl_monte_carlo(double threshold, double delta, int reps, long horizon, std::uint64_t seed);

/// 1 - exp(-horizon / arl).
double false_alarm_prob(double arl, double horizon);

}  // namespace srwatch
