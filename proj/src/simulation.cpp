#include "srwatch/simulation.hpp"

#include <cmath>
#include <cstdio>

#include "srwatch/error.hpp"

namespace srwatch {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Ar1Model::marginal_sd() const { return sigma / std::sqrt(1 - a1 * a1); }

void ChangePointConfig::validate() const {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "series length must be >= 1");
  if (nu && (*nu < 1 || *nu > n)) throw Error(ErrorCode::InvalidConfig, "change index must satisfy 1 <= nu <= n");
  if (!std::isfinite(delta)) throw Error(ErrorCode::InvalidConfig, "delta must be finite");
  if (const auto* iid = std::get_if<IidNormalModel>(&model)) {
    if (!(iid->tau > 0) || !std::isfinite(iid->mu0)) throw Error(ErrorCode::InvalidConfig, "tau must be positive");
  } else {
    const auto& ar = std::get<Ar1Model>(model);
    if (!(ar.sigma > 0)) throw Error(ErrorCode::InvalidConfig, "sigma must be positive");
    if (!(std::abs(ar.a1) < 1)) throw Error(ErrorCode::InvalidConfig, "|a1| must be < 1");
  }
  if (gaps && (!(gaps->min_gap > 0) || gaps->max_gap < gaps->min_gap))
    throw Error(ErrorCode::InvalidConfig, "gap bounds must satisfy 0 < min_gap <= max_gap");
}

MeasurementSeries generate(const ChangePointConfig& config) {
  config.validate();
  Rng rng(config.seed);
  MeasurementSeries out;
  out.series_id = config.series_id;
  out.label = config.label;
  out.values.resize(static_cast<std::size_t>(config.n));
  out.timestamps.resize(static_cast<std::size_t>(config.n));

  const auto shifted = [&](int i) { return config.nu && i >= *config.nu; };

  if (const auto* iid = std::get_if<IidNormalModel>(&config.model)) {
    for (int i = 1; i <= config.n; ++i) {
      const double mean = iid->mu0 + (shifted(i) ? config.delta * iid->tau : 0.0);
      out.values[static_cast<std::size_t>(i - 1)] = rng.normal(mean, iid->tau);
    }
  } else {
    const auto& ar = std::get<Ar1Model>(config.model);
    const double shift = config.delta * ar.marginal_sd();
    double deviation = 0;
    for (int burn = 0; burn < 100; ++burn) deviation = ar.a1 * deviation + ar.sigma * rng.normal();
    for (int i = 1; i <= config.n; ++i) {
      deviation = ar.a1 * deviation + ar.sigma * rng.normal();
      out.values[static_cast<std::size_t>(i - 1)] = ar.mean() + (shifted(i) ? shift : 0.0) + deviation;
    }
  }

  // Timestamps use their own stream so the values do not depend on gaps.
  Rng gap_rng(derive_seed(config.seed, 0x6761707300ULL));
  double clock = 0;
  for (int i = 0; i < config.n; ++i) {
    if (config.gaps)
      clock += config.gaps->min_gap + (config.gaps->max_gap - config.gaps->min_gap) * gap_rng.uniform();
    else
      clock += 1.0;
    out.timestamps[static_cast<std::size_t>(i)] = clock;
  }
  return out;
}

std::vector<double> generate_exponential(int n, std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::InvalidConfig, "negative length");
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = rng.exponential(1.0);
  return out;
}

void CohortConfig::validate() const {
  if (series_count < 1) throw Error(ErrorCode::InvalidConfig, "series_count must be >= 1");
  if (!(died_fraction >= 0 && died_fraction <= 1)) throw Error(ErrorCode::InvalidConfig, "died_fraction must be in [0, 1]");
  if (model != "iid_normal" && model != "ar1" && model != "mixed")
    throw Error(ErrorCode::InvalidConfig, "model must be iid_normal, ar1 or mixed");
}

std::vector<MeasurementSeries> generate_cohort(const CohortConfig& config) {
  config.validate();
  std::vector<MeasurementSeries> cohort;
  cohort.reserve(static_cast<std::size_t>(config.series_count));
  int group_index[2] = {0, 0};
  for (int i = 0; i < config.series_count; ++i) {
    const bool use_ar1 = config.model == "ar1" || (config.model == "mixed" && i % 2 == 1);
    const int j = group_index[use_ar1 ? 1 : 0]++;

    ChangePointConfig c;
    c.n = config.length;
    c.model = use_ar1 ? std::variant<IidNormalModel, Ar1Model>(config.ar1)
                      : std::variant<IidNormalModel, Ar1Model>(config.iid);
    c.delta = config.delta;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    c.gaps = config.gaps;
    char id[32];
    std::snprintf(id, sizeof id, "cohort-%04d", i + 1);
    c.series_id = id;

    bool changed = true;
    if (config.labeled) {
      const double f = config.died_fraction;
      const bool died = std::floor((j + 1) * f) > std::floor(j * f);
      c.label = died ? Outcome::Died : Outcome::Survived;
      changed = died;
    }
    if (changed) c.nu = config.nu;
    cohort.push_back(generate(c));
  }
  return cohort;
}

}  // namespace srwatch
