#include "srwatch/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "srwatch/error.hpp"
#include "srwatch/simulation.hpp"
#include "srwatch/sr_core.hpp"
#include "srwatch/stats.hpp"

namespace srwatch {

namespace {

void count_classes(std::span<const LabeledScore> scores, int& died, int& survived) {
  died = 0;
  survived = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::InvalidInput, "score is not finite");
    (s.label == Outcome::Died ? died : survived) += 1;
  }
  if (died == 0 || survived == 0)
    throw Error(ErrorCode::InvalidInput, "ROC analysis needs at least one score of each label");
}

}  // namespace

double hanley_mcneil_se(double auc, int n_positive, int n_negative) {
  if (n_positive < 1 || n_negative < 1) throw Error(ErrorCode::InvalidParameter, "class sizes must be positive");
  const double q1 = auc / (2 - auc);
  const double q2 = 2 * auc * auc / (1 + auc);
  const double a2 = auc * auc;
  const double var = (auc * (1 - auc) + (n_positive - 1) * (q1 - a2) + (n_negative - 1) * (q2 - a2)) /
                     (static_cast<double>(n_positive) * n_negative);
  return std::sqrt(std::max(var, 0.0));
}

AucSummary auc_with_se(std::span<const LabeledScore> scores) {
  int died = 0;
  int survived = 0;
  count_classes(scores, died, survived);

  // Mann-Whitney U through midranks.
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
  double rank_sum_died = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]].score == scores[order[i]].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (scores[order[k]].label == Outcome::Died) rank_sum_died += midrank;
    i = j;
  }
  const double u = rank_sum_died - 0.5 * died * (died + 1.0);

  AucSummary out;
  out.auc = u / (static_cast<double>(died) * survived);
  out.se = hanley_mcneil_se(out.auc, died, survived);
  out.p_value = out.se > 0 ? stats::normal_two_sided_p((out.auc - 0.5) / out.se) : (out.auc == 0.5 ? 1.0 : 0.0);
  out.ci_lower = out.auc - 1.96 * out.se;
  out.ci_upper = out.auc + 1.96 * out.se;
  return out;
}

RocTable roc_table(std::span<const LabeledScore> scores) {
  RocTable table;
  count_classes(scores, table.n_died, table.n_survived);

  std::vector<double> distinct;
  distinct.reserve(scores.size());
  for (const auto& s : scores) distinct.push_back(s.score);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> cutoffs{distinct.front() - 1};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) cutoffs.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  cutoffs.push_back(distinct.back() + 1);

  // Sweep with both lists sorted; each cutoff counts scores >= cutoff.
  std::vector<double> died_scores;
  std::vector<double> survived_scores;
  for (const auto& s : scores) (s.label == Outcome::Died ? died_scores : survived_scores).push_back(s.score);
  std::sort(died_scores.begin(), died_scores.end());
  std::sort(survived_scores.begin(), survived_scores.end());
  const auto at_or_above = [](const std::vector<double>& v, double c) {
    return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), c));
  };
  for (const double c : cutoffs) {
    table.rows.push_back({c, at_or_above(died_scores, c) / table.n_died,
                          at_or_above(survived_scores, c) / table.n_survived});
  }
  table.auc = auc_with_se(scores);
  return table;
}

double weighted_score(double sensitivity, double specificity, double alpha) {
  const auto unit = [](double v) { return v >= 0 && v <= 1; };
  if (!unit(sensitivity) || !unit(specificity) || !unit(alpha))
    throw Error(ErrorCode::InvalidParameter, "sensitivity, specificity and alpha must lie in [0, 1]");
  return alpha * sensitivity + (1 - alpha) * specificity;
}

ThresholdChoice select_threshold(const RocTable& roc, double alpha) {
  if (roc.rows.empty()) throw Error(ErrorCode::InvalidInput, "empty ROC table");
  std::optional<ThresholdChoice> best;
  for (const auto& row : roc.rows) {
    const double specificity = row.specificity();
    if (!(row.sensitivity > specificity)) continue;
    const double g = weighted_score(row.sensitivity, std::clamp(specificity, 0.0, 1.0), alpha);
    if (!best || g > best->score + 1e-12 || (std::abs(g - best->score) <= 1e-12 && row.cutoff > best->threshold))
      best = ThresholdChoice{row.cutoff, row.sensitivity, specificity, g};
  }
  if (!best) throw Error(ErrorCode::NoAdmissibleThreshold, "no cutoff has sensitivity > specificity");
  return *best;
}

RocTable read_roc_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open ROC table " + path.string());
  RocTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash, key;
      double value;
      fields >> hash >> key >> value;
      if (!fields) continue;
      if (key == "n_died") table.n_died = static_cast<int>(value);
      else if (key == "n_survived") table.n_survived = static_cast<int>(value);
      else if (key == "auc") table.auc.auc = value;
      else if (key == "auc_se") table.auc.se = value;
      else if (key == "auc_p") table.auc.p_value = value;
      else if (key == "ci_lower") table.auc.ci_lower = value;
      else if (key == "ci_upper") table.auc.ci_upper = value;
      continue;
    }
    RocRow row;
    fields >> row.cutoff >> row.sensitivity >> row.false_positive_rate;
    if (!fields)
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(line_no) + ": expected three numbers");
    if (!table.rows.empty() && !(row.cutoff > table.rows.back().cutoff))
      throw Error(ErrorCode::Validation, path.string() + ":" + std::to_string(line_no) + ": cutoffs must increase");
    table.rows.push_back(row);
  }
  if (table.rows.empty()) throw Error(ErrorCode::Parse, path.string() + ": no ROC rows");
  return table;
}

ArlEstimate arl_monte_carlo(double threshold, double delta, int reps, long horizon, std::uint64_t seed) {
  if (!(threshold >= 1) || !std::isfinite(threshold))
    throw Error(ErrorCode::InvalidParameter, "ARL threshold must be >= 1");
  if (reps < 100) throw Error(ErrorCode::InvalidParameter, "ARL estimation needs at least 100 replications");
  if (!std::isfinite(delta) || delta == 0) throw Error(ErrorCode::InvalidParameter, "delta must be finite and nonzero");
  if (horizon <= 0) horizon = std::max(100L, static_cast<long>(std::ceil(10 * threshold)));

  ArlEstimate est;
  est.reps = reps;
  est.threshold = threshold;
  est.delta = delta;
  est.horizon = horizon;
  est.run_lengths.assign(static_cast<std::size_t>(reps), 0);

  std::vector<char> censored(static_cast<std::size_t>(reps), 0);
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      SrOptions options;
      options.delta = delta;
      SrMonitor monitor(options);
      long n = 0;
      bool alarmed = false;
      while (n < horizon) {
        ++n;
        if (monitor.push(rng.normal()) >= threshold) {
          alarmed = true;
          break;
        }
      }
      est.run_lengths[static_cast<std::size_t>(r)] = n;
      censored[static_cast<std::size_t>(r)] = alarmed ? 0 : 1;
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 64u));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  // Fixed-order reduction keeps the estimate independent of scheduling.
  double total = 0;
  for (std::size_t r = 0; r < est.run_lengths.size(); ++r) {
    total += static_cast<double>(est.run_lengths[r]);
    est.censored += censored[r];
  }
  const int alarms = reps - est.censored;
  if (alarms == 0) throw Error(ErrorCode::InvalidParameter, "no replication alarmed before the horizon");
  est.arl = total / alarms;

  double ss = 0;
  for (std::size_t r = 0; r < est.run_lengths.size(); ++r) {
    const double v = static_cast<double>(est.run_lengths[r]) + (censored[r] ? est.arl : 0.0);
    ss += (v - est.arl) * (v - est.arl);
  }
  est.standard_error = std::sqrt(ss / (reps - 1) / reps);
  return est;
}

double false_alarm_prob(double arl, double horizon) {
  if (!(arl > 0)) throw Error(ErrorCode::InvalidParameter, "ARL must be positive");
  if (!(horizon >= 0)) throw Error(ErrorCode::InvalidParameter, "horizon must be nonnegative");
  return -std::expm1(-horizon / arl);
}

}  // namespace srwatch
