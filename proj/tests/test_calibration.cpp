#include <doctest.h>

#include <cmath>
#include <random>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "srwatch/calibration.hpp"
#include "srwatch/error.hpp"
#include "srwatch/pipeline.hpp"
#include "srwatch/stats.hpp"

using namespace srwatch;

namespace {

template <class F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::vector<LabeledScore> labeled(const std::vector<double>& died, const std::vector<double>& survived) {
  std::vector<LabeledScore> out;
  for (const double d : died) out.push_back({d, Outcome::Died});
  for (const double s : survived) out.push_back({s, Outcome::Survived});
  return out;
}

std::vector<oracle::Labeled> plain(const std::vector<LabeledScore>& s) {
  std::vector<oracle::Labeled> out;
  for (const auto& x : s) out.push_back({x.score, x.label == Outcome::Died});
  return out;
}

std::vector<LabeledScore> random_scores(std::mt19937_64& gen, bool ties) {
  std::uniform_int_distribution<int> size(2, 40);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> small(1, 12);
  std::lognormal_distribution<double> wide(3, 2);
  const int n = size(gen);
  std::vector<LabeledScore> out;
  for (int i = 0; i < n; ++i) {
    const double score = ties ? double(small(gen)) : wide(gen);
    out.push_back({score, coin(gen) ? Outcome::Died : Outcome::Survived});
  }
  out[0].label = Outcome::Died;
  out[1].label = Outcome::Survived;
  return out;
}

RocTable fixture(const char* name) { return read_roc_table(std::string(SRWATCH_FIXTURE_DIR) + "/" + name); }

}  // namespace

TEST_CASE("ROC table construction") {
  const RocTable t = roc_table(labeled({10, 20}, {5}));
  REQUIRE(t.rows.size() == 4);
  const double cut[] = {4, 7.5, 15, 21}, sens[] = {1, 1, 0.5, 0}, fpr[] = {1, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    CHECK(t.rows[i].cutoff == cut[i]);
    CHECK(t.rows[i].sensitivity == sens[i]);
    CHECK(t.rows[i].false_positive_rate == fpr[i]);
  }
  CHECK(t.n_died == 2);
  CHECK(t.n_survived == 1);

  const RocTable separated = roc_table(labeled({50, 60, 70}, {1, 2, 3}));
  bool perfect = false;
  for (const auto& r : separated.rows) perfect = perfect || (r.sensitivity == 1 && r.false_positive_rate == 0);
  CHECK(perfect);
  CHECK(separated.auc.auc == 1.0);

  CHECK(code_of([] { roc_table(labeled({1, 2}, {})); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { auc_with_se(labeled({}, {1, 2})); }) == ErrorCode::InvalidInput);
}

TEST_CASE("ROC table against brute force") {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 100; ++rep) {
    const auto scores = random_scores(gen, rep % 2 == 0);
    const RocTable t = roc_table(scores);
    const auto brute = oracle::brute_roc(plain(scores));
    REQUIRE(t.rows.size() == brute.size());
    CHECK(t.rows.front().sensitivity == 1.0);
    CHECK(t.rows.front().false_positive_rate == 1.0);
    for (std::size_t i = 0; i < brute.size(); ++i) {
      CHECK(t.rows[i].cutoff == brute[i].cutoff);
      CHECK(t.rows[i].sensitivity == brute[i].sensitivity);
      CHECK(t.rows[i].false_positive_rate == brute[i].fpr);
      if (i > 0) {
        CHECK(t.rows[i].cutoff > t.rows[i - 1].cutoff);
        CHECK(t.rows[i].sensitivity <= t.rows[i - 1].sensitivity);
        CHECK(t.rows[i].false_positive_rate <= t.rows[i - 1].false_positive_rate);
      }
    }
    CHECK(t.auc.auc == oracle::brute_auc(plain(scores)));
  }
}

TEST_CASE("AUC standard error and null behaviour") {
  // Published table: area .698, SE .071 (26 died, 32 survived) and
  // area .692, SE .046 (62 died, 75 survived).
  CHECK(std::abs(hanley_mcneil_se(0.698, 26, 32) / 0.071 - 1) <= 0.3);
  CHECK(std::abs(hanley_mcneil_se(0.692, 62, 75) / 0.046 - 1) <= 0.3);

  const auto s = auc_with_se(labeled({3, 4, 5, 6}, {1, 2, 3.5, 4.5, 0.5}));
  CHECK(s.ci_lower == doctest::Approx(s.auc - 1.96 * s.se));
  CHECK(s.ci_upper == doctest::Approx(s.auc + 1.96 * s.se));
  CHECK(s.p_value == doctest::Approx(stats::normal_two_sided_p((s.auc - 0.5) / s.se)));

  std::mt19937_64 gen(23);
  std::normal_distribution<double> nd;
  double sum = 0, sum2 = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    std::vector<LabeledScore> x;
    for (int i = 0; i < 60; ++i) x.push_back({nd(gen), i % 2 ? Outcome::Died : Outcome::Survived});
    const double a = auc_with_se(x).auc;
    sum += a;
    sum2 += a * a;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  CHECK(std::abs(mean - 0.5) < 3 * se);
}

TEST_CASE("weighted score") {
  CHECK(weighted_score(0.81, 0.56, 0.5) == doctest::Approx(0.685));
  CHECK(weighted_score(0.3, 0.9, 1) == 0.3);
  CHECK(weighted_score(0.3, 0.9, 0) == 0.9);
  CHECK(code_of([] { weighted_score(1.1, 0.5, 0.5); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { weighted_score(0.5, 0.5, -0.1); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("threshold selection on the published tables") {
  const RocTable independent = fixture("roc_independent.tsv");
  CHECK(independent.rows.size() == 50);
  CHECK(independent.n_died == 26);
  CHECK(independent.n_survived == 32);
  CHECK(independent.auc.auc == doctest::Approx(0.698));
  CHECK(independent.auc.se == doctest::Approx(0.071));
  for (const double alpha : {0.5, 0.6, 0.7}) {
    const ThresholdChoice c = select_threshold(independent, alpha);
    CHECK(c.threshold == 674);
    CHECK(c.sensitivity == 0.81);
    CHECK(c.specificity == doctest::Approx(0.56).epsilon(1e-12));
  }

  const RocTable residuals = fixture("roc_ar1_residuals.tsv");
  CHECK(residuals.rows.size() == 113);
  const ThresholdChoice half = select_threshold(residuals, 0.5);
  CHECK(half.threshold == 101);
  CHECK(half.sensitivity == 0.726);
  CHECK(half.specificity == doctest::Approx(0.533).epsilon(1e-12));
  const ThresholdChoice sixty = select_threshold(residuals, 0.6);
  CHECK(sixty.threshold == 73);
  CHECK(sixty.sensitivity == 0.823);
  CHECK(sixty.specificity == doctest::Approx(0.427).epsilon(1e-12));
}

TEST_CASE("threshold selection rules") {
  RocTable t;
  t.rows = {{1, 1.0, 1.0}, {2, 0.9, 0.5}, {3, 0.8, 0.4}, {4, 0.6, 0.3}, {5, 0.0, 0.0}};
  // g(0.5): cutoffs 2 and 3 both give 0.7 (cutoff 4 has sensitivity <
  // specificity); the tie goes to the larger cutoff.
  CHECK(select_threshold(t, 0.5).threshold == 3);
  CHECK(select_threshold(t, 0.9).threshold == 1);

  RocTable none;
  none.rows = {{1, 0.2, 0.1}, {2, 0.0, 0.0}};
  CHECK(code_of([&] { select_threshold(none, 0.5); }) == ErrorCode::NoAdmissibleThreshold);
  CHECK(code_of([] { select_threshold(RocTable{}, 0.5); }) == ErrorCode::InvalidInput);

  // Only ranks matter: a strictly increasing transform picks the same row.
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 30; ++rep) {
    auto scores = random_scores(gen, false);
    auto transformed = scores;
    for (auto& s : transformed) s.score = std::log(s.score) * 3 + 7;
    const RocTable a = roc_table(scores), b = roc_table(transformed);
    for (const double alpha : {0.5, 0.7}) {
      std::optional<ThresholdChoice> ca, cb;
      try {
        ca = select_threshold(a, alpha);
        cb = select_threshold(b, alpha);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoAdmissibleThreshold);
        continue;
      }
      CHECK(ca->sensitivity == cb->sensitivity);
      CHECK(ca->specificity == cb->specificity);
    }
  }
}

TEST_CASE("ROC table file round trip") {
  std::mt19937_64 gen(41);
  const RocTable t = roc_table(random_scores(gen, false));
  std::ostringstream out;
  write_roc_table(out, t);
  const auto path = std::filesystem::temp_directory_path() / "srwatch_roc_roundtrip.tsv";
  std::ofstream(path) << out.str();
  const RocTable back = read_roc_table(path);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].cutoff == t.rows[i].cutoff);
    CHECK(back.rows[i].sensitivity == t.rows[i].sensitivity);
  }
  CHECK(back.auc.auc == t.auc.auc);
  std::filesystem::remove(path);
  CHECK(code_of([] { read_roc_table("/nonexistent/table.tsv"); }) == ErrorCode::Io);
}

TEST_CASE("average run length") {
  const ArlEstimate one = arl_monte_carlo(1.0, 1.0, 100, 0, 5);
  CHECK(one.arl == 1.0);
  CHECK(one.censored == 0);

  CHECK(code_of([] { arl_monte_carlo(10, 1, 99, 0, 1); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { arl_monte_carlo(0.5, 1, 100, 0, 1); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { arl_monte_carlo(10, 0, 100, 0, 1); }) == ErrorCode::InvalidParameter);

  const ArlEstimate a = arl_monte_carlo(20, 1, 300, 0, 9);
  const ArlEstimate b = arl_monte_carlo(20, 1, 300, 0, 9);
  CHECK(a.arl == b.arl);
  CHECK(a.run_lengths == b.run_lengths);
  CHECK(a.arl >= 1);
  CHECK(a.standard_error > 0);

  // Tight horizon: censored runs are counted and extrapolated.
  const ArlEstimate c = arl_monte_carlo(50, 1, 200, 20, 9);
  CHECK(c.censored > 0);
  long observed = 0;
  for (const long n : c.run_lengths) observed += n;
  CHECK(c.arl == doctest::Approx(double(observed) / (200 - c.censored)));
}

TEST_CASE("Kolmogorov-Smirnov against an exponential law") {
  std::mt19937_64 gen(3);
  std::exponential_distribution<double> expo(1.0 / 40);
  std::uniform_real_distribution<double> unif(0, 80);
  std::vector<double> e, u;
  for (int i = 0; i < 500; ++i) {
    e.push_back(expo(gen));
    u.push_back(unif(gen));
  }
  CHECK(stats::ks_exponential(e, 40).p_value > 0.01);
  CHECK(stats::ks_exponential(u, 40).p_value < 0.01);
  // D for a single point at the mean: max(|1 - F|, F) with F = 1 - 1/e.
  const double one[] = {1.0};
  CHECK(stats::ks_exponential(one, 1.0).statistic == doctest::Approx(1 - std::exp(-1.0)));
  CHECK(stats::kolmogorov_sf(0) == 1.0);
  CHECK(stats::kolmogorov_sf(1.36) == doctest::Approx(0.0494).epsilon(0.01));
}

TEST_CASE("false alarm probability") {
  CHECK(false_alarm_prob(180, 60) == doctest::Approx(0.2835).epsilon(1e-3));
  CHECK(false_alarm_prob(1203, 60) == doctest::Approx(0.0487).epsilon(1e-3));
  CHECK(false_alarm_prob(500, 0) == 0.0);
  CHECK(code_of([] { false_alarm_prob(0, 10); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { false_alarm_prob(10, -1); }) == ErrorCode::InvalidParameter);
}
