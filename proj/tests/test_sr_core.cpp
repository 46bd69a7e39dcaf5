#include <doctest.h>

#include <fstream>
#include <random>
#include <string>

#include "oracles.hpp"
#include "srwatch/error.hpp"
#include "srwatch/quadrature.hpp"
#include "srwatch/simulation.hpp"
#include "srwatch/sr_core.hpp"

using namespace srwatch;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out(i++) = x;
  return out;
}

VectorXd normals(int n, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal();
  return x;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no srwatch::Error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("recursive residuals") {
  const auto y = recursive_residuals(vec({4.0, 4.0}));
  REQUIRE(y.size() == 1);
  CHECK(y(0) == 0.0);

  const auto y3 = recursive_residuals(vec({0, 1, 2}));
  CHECK(y3(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(y3(1) == doctest::Approx(1.5 * std::sqrt(2.0 / 3.0)).epsilon(1e-12));

  CHECK(code_of([] { recursive_residuals(vec({1.0})); }) == ErrorCode::InsufficientData);
  CHECK(code_of([] { recursive_residuals(vec({1.0, std::nan("")})); }) == ErrorCode::InvalidInput);

  const VectorXd x = normals(10000, 11);
  const VectorXd r = recursive_residuals(x);
  const double mean = r.mean();
  const double sd = std::sqrt((r.array() - mean).square().sum() / double(r.size() - 1));
  CHECK(std::abs(mean) < 3 * sd / std::sqrt(double(r.size())));
}

TEST_CASE("scale normalization") {
  const VectorXd z = scale_normalize(vec({0.70711, 1.22474}));
  CHECK(z(0) == 1.0);
  CHECK(z(1) == doctest::Approx(1.73205).epsilon(1e-5));
  CHECK(code_of([] { scale_normalize(vec({0.0, 1.0})); }) == ErrorCode::DegenerateNormalizer);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const VectorXd x = normals(30, seed);
    const VectorXd za = invariant_sequence(x).z;
    const VectorXd zb = invariant_sequence((7.0 - 3.0 * x.array()).matrix()).z;
    CHECK(za(0) == 1.0);
    CHECK((za - zb).cwiseAbs().maxCoeff() <= 1e-9 * za.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("a coefficient") {
  CHECK(a_coefficient(vec({1, 0, 0, 0}), 3, 5, 1.0) == 0.0);
  CHECK(a_coefficient(vec({1, 1}), 3, 3, 1.0) == doctest::Approx(2.0 / std::sqrt(6.0) / std::sqrt(2.0)));

  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> z(19);
    for (auto& v : z) v = nd(gen);
    z[0] = 1;
    const VectorXd ze = Eigen::Map<const VectorXd>(z.data(), 19);
    const double lib = a_coefficient(ze, 4, 20, 1.0);
    CHECK(std::abs(lib - oracle::a_coefficient(z, 4, 20, 1.0)) <= 1e-12 * std::max(1.0, std::abs(lib)));
  }
  CHECK(code_of([] { a_coefficient(vec({0, 0, 0}), 3, 4, 1.0); }) == ErrorCode::DegenerateInput);
}

TEST_CASE("likelihood ratio") {
  SUBCASE("zero a reduces to the exponential factor") {
    CHECK(likelihood_ratio(vec({1, 0, 0, 0}), 3, 5, 1.0) == doctest::Approx(std::exp(-0.6)).epsilon(1e-14));
  }
  SUBCASE("preconditions") {
    CHECK(code_of([] { likelihood_ratio(vec({1}), 2, 2, 1.0); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { likelihood_ratio(vec({1, 1, 1}), 2, 4, 1.0); }) == ErrorCode::InvalidParameter);
    CHECK(code_of([] { likelihood_ratio(vec({1, 1, 1}), 5, 4, 1.0); }) == ErrorCode::InvalidParameter);
  }
  SUBCASE("quadrature oracle, k = 3, n = 10") {
    const auto z = oracle::z_sequence(to_std(normals(10, 21)));
    const VectorXd ze = Eigen::Map<const VectorXd>(z.data(), 9);
    const double lib = likelihood_ratio(ze, 3, 10, 1.0);
    const double ref = oracle::likelihood_ratio(z, 3, 10, 1.0);
    CHECK(std::abs(lib - ref) <= 1e-6 * ref);
  }
  SUBCASE("positivity and symmetry in delta") {
    const auto z = oracle::z_sequence(to_std(normals(25, 22)));
    const VectorXd ze = Eigen::Map<const VectorXd>(z.data(), 24);
    for (int k = 3; k <= 25; ++k) {
      const double up = likelihood_ratio(ze, k, 25, 1.0);
      CHECK(up > 0);
      CHECK(up == doctest::Approx(likelihood_ratio(ze, k, 25, -1.0)).epsilon(1e-12));
    }
  }
  SUBCASE("no-change mean is one") {
    // E_inf[Lambda_k^n] = 1 for a likelihood ratio.
    const int k = 5, n = 9, reps = 40000;
    double sum = 0, sum2 = 0;
    for (int r = 0; r < reps; ++r) {
      const VectorXd z = invariant_sequence(normals(n, derive_seed(99, r))).z;
      const double l = likelihood_ratio(z, k, n, 1.0);
      sum += l;
      sum2 += l * l;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
    CHECK(std::abs(mean - 1) < 3 * se);
  }
}

TEST_CASE("moment ratio paths agree") {
  for (const double a : {-6.0, -1.5, 0.0, 0.3, 2.0, 5.5}) {
    for (const Index m : {1, 2, 7, 48, 200, 900}) {
      const double rec = std::log(moment_ratio(a, m));
      CHECK(log_moment_ratio_quadrature(a, m) == doctest::Approx(rec).epsilon(1e-10).scale(1.0));
      CHECK(log_moment_ratio_series(a, m) == doctest::Approx(rec).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("adaptive quadrature") {
  const auto r = quadrature::integrate<double>([](double t) { return std::exp(-0.5 * t * t); }, -40, 40, 1e-13);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-13));
  const auto kink = quadrature::integrate<double>([](double t) { return std::abs(t - 0.3); }, -1, 1, 1e-12, 0,
                                                  {0.3});
  CHECK(kink.value == doctest::Approx(0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7).epsilon(1e-12));
}

TEST_CASE("SR sequence initialization") {
  const VectorXd one = sr_sequence(vec({4.2}));
  REQUIRE(one.size() == 1);
  CHECK(one(0) == 1.0);
  const VectorXd two = sr_sequence(vec({4.2, 3.1}));
  REQUIRE(two.size() == 2);
  CHECK(two(0) == 1.0);
  CHECK(two(1) == 2.0);
  CHECK(code_of([] { sr_sequence(VectorXd(0)); }) == ErrorCode::InsufficientData);
}

TEST_CASE("SR sequence matches the reference program") {
  std::ifstream in(SRWATCH_FIXTURE_DIR "/sr_twelve.txt");
  REQUIRE(in);
  std::vector<double> x;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') x.push_back(std::stod(line));
  REQUIRE(x.size() == 12);
  const auto ref = oracle::reference_sr(x, 1.0);
  const VectorXd lib = sr_sequence(Eigen::Map<const VectorXd>(x.data(), 12));
  for (int i = 0; i < 12; ++i) CHECK(std::abs(lib(i) - ref[i]) <= 1e-9 * ref[i]);

  // Longer series, both delta signs and the unscreened path.
  const auto y = to_std(normals(250, 77));
  for (const double d : {1.0, -0.5, 2.0}) {
    const auto r = oracle::reference_sr(y, d);
    SrOptions full;
    full.delta = d;
    full.skip_negligible = false;
    SrOptions screened;
    screened.delta = d;
    const VectorXd a = sr_sequence(Eigen::Map<const VectorXd>(y.data(), 250), full);
    const VectorXd b = sr_sequence(Eigen::Map<const VectorXd>(y.data(), 250), screened);
    for (int i = 0; i < 250; ++i) {
      CHECK(std::abs(a(i) - r[i]) <= 1e-9 * r[i]);
      CHECK(std::abs(b(i) - r[i]) <= 1e-9 * r[i]);
    }
  }
}

TEST_CASE("SR sequence affine invariance and positivity") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const VectorXd x = normals(60, seed + 500);
    const VectorXd a = sr_sequence(x);
    const VectorXd b = sr_sequence((-2.5 + 0.01 * x.array()).matrix());
    CHECK((a.array() > 0).all());
    CHECK(((a - b).array().abs() / a.array()).maxCoeff() <= 1e-9);
  }
}

TEST_CASE("tied start") {
  const VectorXd x = vec({4.0, 4.0, 4.0, 4.3, 3.9, 4.1, 4.6});
  CHECK(code_of([&] { sr_sequence(x); }) == ErrorCode::DegenerateNormalizer);

  SrOptions options;
  options.restart_on_tied_start = true;
  const SrTrajectory t = sr_sequence_restarting(x, options);
  CHECK(t.dropped == 2);
  REQUIRE(t.statistics.size() == 7);
  CHECK(t.statistics(0) == 1.0);
  CHECK(t.statistics(1) == 1.0);
  CHECK(t.statistics(2) == 1.0);
  // Past the dropped prefix the scheme restarts on the remaining values.
  const VectorXd rest = sr_sequence(x.tail(5));
  for (int i = 0; i < 5; ++i) CHECK(t.statistics(2 + i) == doctest::Approx(rest(i)).epsilon(1e-12));
}

TEST_CASE("monitor streaming equals batch") {
  const VectorXd x = normals(80, 4242);
  const VectorXd batch = sr_sequence(x);
  SrMonitor monitor;
  for (Index i = 0; i < x.size(); ++i) CHECK(monitor.push(x(i)) == batch(i));
  CHECK(monitor.size() == 80);
  CHECK(code_of([&] { monitor.push(std::numeric_limits<double>::infinity()); }) == ErrorCode::InvalidInput);
}

TEST_CASE("stopping time") {
  CHECK(stopping_time(vec({1, 2, 5}), 4.0) == 3);
  CHECK_FALSE(stopping_time(vec({1, 2, 3}), 10.0).has_value());
  CHECK(stopping_time(vec({1, 2, 3}), 1.0) == 1);
  CHECK(code_of([] { stopping_time(vec({1, 2}), 0.0); }) == ErrorCode::InvalidThreshold);
}
