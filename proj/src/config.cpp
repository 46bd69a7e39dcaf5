#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "srwatch/error.hpp"
#include "srwatch/pipeline.hpp"

namespace srwatch {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(int line, std::string_view key, std::string_view why) {
  throw Error(ErrorCode::InvalidConfig,
              "config line " + std::to_string(line) + ": " + std::string(key) + ": " + std::string(why));
}

double to_double(std::string_view text, int line, std::string_view key) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) bad(line, key, "expected a number");
  return v;
}

int to_int(std::string_view text, int line, std::string_view key) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) bad(line, key, "expected an integer");
  return v;
}

bool to_bool(std::string_view text, int line, std::string_view key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  bad(line, key, "expected true or false");
}

struct Entry {
  std::string value;
  int line = 0;
};

/// Reads `key = value` lines into a map; duplicate keys are errors.
std::map<std::string, Entry, std::less<>> read_entries(std::istream& in) {
  std::map<std::string, Entry, std::less<>> entries;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) bad(line, text, "expected key = value");
    const auto key = trim(text.substr(0, eq));
    if (entries.count(key)) bad(line, key, "duplicate key");
    entries.emplace(std::string(key), Entry{std::string(trim(text.substr(eq + 1))), line});
  }
  return entries;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : entries_(read_entries(in)) {}

  bool has(std::string_view key) const { return entries_.count(key) > 0; }

  template <class F>
  void take(std::string_view key, F&& apply) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return;
    apply(std::string_view(it->second.value), it->second.line, key);
    entries_.erase(it);
  }

  void real(std::string_view key, double& out) {
    take(key, [&](auto v, int line, auto k) { out = to_double(v, line, k); });
  }
  void integer(std::string_view key, int& out) {
    take(key, [&](auto v, int line, auto k) { out = to_int(v, line, k); });
  }
  void boolean(std::string_view key, bool& out) {
    take(key, [&](auto v, int line, auto k) { out = to_bool(v, line, k); });
  }
  void seed(std::string_view key, std::uint64_t& out) {
    take(key, [&](auto v, int line, auto k) {
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc{} || ptr != v.data() + v.size()) bad(line, k, "expected an unsigned integer");
    });
  }
  void text(std::string_view key, std::string& out) {
    take(key, [&](auto v, int, auto) { out = std::string(v); });
  }

  /// Every key must have been consumed.
  void finish() const {
    if (!entries_.empty()) bad(entries_.begin()->second.line, entries_.begin()->first, "unknown key");
  }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

std::optional<int> change_index(Reader& r) {
  std::optional<int> nu;
  r.take("nu", [&](auto v, int line, auto k) {
    if (v == "none") nu.reset();
    else nu = to_int(v, line, k);
  });
  return nu;
}

std::optional<UniformGaps> gaps(Reader& r) {
  if (!r.has("gap_min") && !r.has("gap_max")) return std::nullopt;
  UniformGaps g;
  r.real("gap_min", g.min_gap);
  r.real("gap_max", g.max_gap);
  return g;
}

}  // namespace

void MonitorConfig::validate() const {
  if (m < 3) throw Error(ErrorCode::InvalidConfig, "m must be at least 3");
  if (!std::isfinite(delta) || delta == 0) throw Error(ErrorCode::InvalidConfig, "delta must be finite and nonzero");
  if (!(threshold_independent > 1) || !(threshold_dependent > 1) || !std::isfinite(threshold_independent) ||
      !std::isfinite(threshold_dependent))
    throw Error(ErrorCode::InvalidConfig, "thresholds must be finite and greater than 1");
  if (!(significance_level > 0 && significance_level < 1))
    throw Error(ErrorCode::InvalidConfig, "significance_level must lie in (0, 1)");
  for (const double a : alpha_weights)
    if (!(a >= 0 && a <= 1)) throw Error(ErrorCode::InvalidConfig, "alpha weights must lie in [0, 1]");
  if (ljung_box_lags < 0) throw Error(ErrorCode::InvalidConfig, "ljung_box_lags must be nonnegative");
}

MonitorConfig parse_monitor_config(std::istream& in) {
  Reader r(in);
  MonitorConfig config;
  r.integer("m", config.m);
  r.real("delta", config.delta);
  r.real("threshold_independent", config.threshold_independent);
  r.real("threshold_dependent", config.threshold_dependent);
  r.real("significance_level", config.significance_level);
  r.boolean("continue_after_alarm", config.continue_after_alarm);
  r.integer("ljung_box_lags", config.ljung_box_lags);
  r.take("alpha_weights", [&](std::string_view rest, int line, std::string_view key) {
    config.alpha_weights.clear();
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      config.alpha_weights.push_back(to_double(trim(rest.substr(0, comma)), line, key));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  });
  r.finish();
  config.validate();
  return config;
}

MonitorConfig load_monitor_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  return parse_monitor_config(in);
}

SimulationConfig parse_simulation_config(std::istream& in) {
  Reader r(in);
  const bool cohort = r.has("series_count");
  std::string model = cohort ? CohortConfig{}.model : "iid_normal";
  r.text("model", model);
  IidNormalModel iid;
  Ar1Model ar1;
  if (cohort) {
    const CohortConfig defaults;
    iid = defaults.iid;
    ar1 = defaults.ar1;
  }
  r.real("mu0", iid.mu0);
  r.real("tau", iid.tau);
  r.real("a0", ar1.a0);
  r.real("a1", ar1.a1);
  r.real("sigma", ar1.sigma);

  if (cohort) {
    CohortConfig c;
    c.model = model;
    c.iid = iid;
    c.ar1 = ar1;
    r.integer("series_count", c.series_count);
    r.real("died_fraction", c.died_fraction);
    r.integer("length", c.length);
    if (r.has("nu")) c.nu = change_index(r);
    r.real("delta", c.delta);
    r.seed("seed", c.seed);
    c.gaps = gaps(r);
    r.boolean("labeled", c.labeled);
    r.finish();
    c.validate();
    return c;
  }

  ChangePointConfig c;
  if (model == "iid_normal") c.model = iid;
  else if (model == "ar1") c.model = ar1;
  else throw Error(ErrorCode::InvalidConfig, "model must be iid_normal or ar1, got '" + model + "'");
  r.integer("n", c.n);
  c.nu = change_index(r);
  r.real("delta", c.delta);
  r.seed("seed", c.seed);
  c.gaps = gaps(r);
  r.text("series_id", c.series_id);
  r.take("label", [&](std::string_view v, int line, std::string_view key) {
    c.label = parse_outcome(v);
    if (!c.label) bad(line, key, "expected survived or died");
  });
  r.finish();
  c.validate();
  return c;
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  return parse_simulation_config(in);
}

std::vector<MeasurementSeries> run_simulation(const SimulationConfig& config) {
  if (const auto* single = std::get_if<ChangePointConfig>(&config)) return {generate(*single)};
  return generate_cohort(std::get<CohortConfig>(config));
}

}  // namespace srwatch
