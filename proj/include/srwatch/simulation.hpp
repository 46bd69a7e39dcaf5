#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "srwatch/timeseries.hpp"

namespace srwatch {

/// Portable random source: 64-bit Mersenne Twister (std::mt19937_64, whose
/// output sequence is fixed by the C++ standard) with uniforms built from the
/// top 53 bits and normals from the Box-Muller transform. The standard
/// library distributions are avoided because their algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0) return u;
    }
  }

  double normal() {
    if (cached_) {
      const double z = *cached_;
      cached_.reset();
      return z;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * 3.14159265358979323846 * uniform();
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double mean) { return -mean * std::log(uniform()); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

/// SplitMix64 step; derives independent per-stream seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

struct IidNormalModel {
  double mu0 = 0;
  double tau = 1;
};

struct Ar1Model {
  double a0 = 0;
  double a1 = 0;
  double sigma = 1;
  /// Stationary mean a0 / (1 - a1).
  double mean() const { return a0 / (1 - a1); }
  /// Stationary marginal standard deviation sigma / sqrt(1 - a1^2).
  double marginal_sd() const;
};

/// Gap sampler for irregular timestamps: uniform on [min_gap, max_gap] hours.
struct UniformGaps {
  double min_gap = 1;
  double max_gap = 1;
};

struct ChangePointConfig {
  int n = 100;
  std::variant<IidNormalModel, Ar1Model> model = IidNormalModel{};
  /// 1-based change index; absent means no change.
  std::optional<int> nu;
  /// Shift of the process mean in pre-change marginal standard deviations.
  double delta = 1;
  std::uint64_t seed = 1;
  std::optional<UniformGaps> gaps;
  std::string series_id = "s1";
  std::optional<Outcome> label;

  /// Throws InvalidConfig when the invariants do not hold.
  void validate() const;
};

/// One synthetic series. AR(1) series run a 100-step burn-in so they start
/// in stationarity; the shift moves the process mean, leaving the
/// deviations from it untouched.
MeasurementSeries generate(const ChangePointConfig& config);

/// Exponential(1) sample of length n (non-normal data for power checks).
std::vector<double> generate_exponential(int n, std::uint64_t seed);

/// Labeled synthetic cohort. With model "mixed" series alternate between the
/// independent and the AR(1) model. Within each model group, outcomes are
/// spread evenly at `died_fraction`; only "died" series carry the change.
/// Unlabeled cohorts put the change in every series.
struct CohortConfig {
  int series_count = 100;
  double died_fraction = 0.5;
  int length = 120;
  /// "iid_normal", "ar1" or "mixed".
  std::string model = "mixed";
  IidNormalModel iid{4.2, 0.3};
  Ar1Model ar1{1.68, 0.6, 0.24};
  std::optional<int> nu = 80;
  double delta = 2;
  std::uint64_t seed = 1;
  std::optional<UniformGaps> gaps;
  bool labeled = true;

  void validate() const;
};

std::vector<MeasurementSeries> generate_cohort(const CohortConfig& config);

}  // namespace srwatch
