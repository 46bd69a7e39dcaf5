// srwatch command-line front end.
//
// Exit codes: 0 success, 1 validation / usage / I/O error, 2 numeric error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "srwatch/calibration.hpp"
#include "srwatch/error.hpp"
#include "srwatch/pipeline.hpp"

#ifndef SRWATCH_DEFAULT_FIXTURE_DIR
#define SRWATCH_DEFAULT_FIXTURE_DIR "data/fixtures"
#endif

namespace fs = std::filesystem;
using namespace srwatch;

namespace {

std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

MonitorConfig config_from(const std::string& path) {
  return path.empty() ? MonitorConfig{} : load_monitor_config(path);
}

int run_monitor(const std::string& input, const std::string& config_path, const std::string& out_dir,
                bool continue_flag) {
  MonitorConfig config = config_from(config_path);
  if (continue_flag) config.continue_after_alarm = true;
  const auto cohort = ingest_csv(fs::path(input));
  std::vector<MonitoringReport> reports;
  reports.reserve(cohort.size());
  for (const auto& s : cohort) reports.push_back(monitor_series(s, config));
  emit_report(reports, config, out_dir);
  long alarms = 0;
  for (const auto& r : reports) alarms += r.alarm_index.has_value();
  std::cout << "monitored " << reports.size() << " series, " << alarms << " alarm(s); report in " << out_dir << "\n";
  return 0;
}

int run_calibrate(const std::string& input, const std::string& config_path, const std::string& out_dir) {
  const MonitorConfig config = config_from(config_path);
  const auto cohort = ingest_csv(fs::path(input));
  const CalibrationReport report = cohort_calibrate(cohort, config);
  emit_report(report, config, out_dir);
  for (const auto& b : report.branches) {
    std::cout << to_string(b.branch) << ": ";
    if (!b.roc) {
      std::cout << b.error << "\n";
      continue;
    }
    std::cout << "AUC " << g6(b.roc->auc.auc) << " (SE " << g6(b.roc->auc.se) << ", p " << g6(b.roc->auc.p_value)
              << ")\n";
    for (const auto& s : b.selections)
      std::cout << "  alpha " << g6(s.alpha) << ": "
                << (s.choice ? "A=" + g6(s.choice->threshold) + " sensitivity=" + g6(s.choice->sensitivity) +
                                   " specificity=" + g6(s.choice->specificity)
                             : s.error)
                << "\n";
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& out) {
  const auto series = run_simulation(load_simulation_config(config_path));
  if (out == "-") {
    emit_csv(std::cout, series);
  } else {
    emit_csv(fs::path(out), series);
    std::cerr << "wrote " << series.size() << " series to " << out << "\n";
  }
  return 0;
}

int run_arl(double threshold, double delta, int reps, long horizon, std::uint64_t seed, double window, bool json) {
  const ArlEstimate est = arl_monte_carlo(threshold, delta, reps, horizon, seed);
  const double p = false_alarm_prob(est.arl, window);
  if (json) {
    nlohmann::ordered_json j{{"threshold", est.threshold},     {"delta", est.delta},
                             {"reps", est.reps},               {"seed", seed},
                             {"horizon", est.horizon},         {"arl", est.arl},
                             {"stderr", est.standard_error},   {"censored", est.censored},
                             {"censored_fraction", est.censored_fraction()},
                             {"window", window},               {"false_alarm_prob", p}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "threshold " << g6(threshold) << ", delta " << g6(delta) << ", " << reps << " replications\n"
              << "ARL " << g6(est.arl) << " (SE " << g6(est.standard_error) << ")\n"
              << "censored " << est.censored << " of " << reps << " at horizon " << est.horizon << "\n"
              << "P(false alarm within " << g6(window) << ") = " << g6(p) << "\n";
  }
  if (est.censored_fraction() >= 0.01)
    std::cerr << "warning: censoring is " << g6(100 * est.censored_fraction()) << "%; raise --horizon\n";
  return 0;
}

int run_roc_fixture(const std::string& dir, const std::vector<double>& alphas, const std::string& out_dir) {
  for (const double a : alphas)
    if (!(a >= 0 && a <= 1)) throw Error(ErrorCode::InvalidParameter, "alpha weights must lie in [0, 1]");
  const std::vector<std::pair<std::string, std::string>> tables{{"independent", "roc_independent.tsv"},
                                                                {"ar1_residuals", "roc_ar1_residuals.tsv"}};
  nlohmann::ordered_json root{{"schema", "srwatch.roc-fixture/1"}};
  std::ostringstream text;
  std::vector<RocTable> loaded;
  loaded.reserve(tables.size());
  for (const auto& [name, file] : tables) {
    loaded.push_back(read_roc_table(fs::path(dir) / file));
    const RocTable& roc = loaded.back();
    const auto selections = select_thresholds(roc, alphas);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    text << name << " (" << roc.rows.size() << " cutoffs, died " << roc.n_died << ", survived " << roc.n_survived
         << ")\n";
    for (const auto& s : selections) {
      text << "  alpha " << g6(s.alpha) << ": ";
      if (s.choice) {
        text << "A=" << g6(s.choice->threshold) << " sensitivity=" << g6(s.choice->sensitivity)
             << " specificity=" << g6(s.choice->specificity) << " g=" << g6(s.choice->score) << "\n";
        rows.push_back({{"alpha", s.alpha},
                        {"threshold", s.choice->threshold},
                        {"sensitivity", s.choice->sensitivity},
                        {"specificity", s.choice->specificity},
                        {"g", s.choice->score}});
      } else {
        text << s.error << "\n";
        rows.push_back({{"alpha", s.alpha}, {"threshold", nullptr}, {"error", s.error}});
      }
    }
    root[name] = rows;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / ("g_" + name + ".svg")) << g_curve_svg(roc, selections, "g(A, alpha), " + name);
    }
  }
  std::cout << text.str();
  if (!out_dir.empty()) {
    std::ofstream(fs::path(out_dir) / "roc_fixture.txt") << text.str();
    std::ofstream(fs::path(out_dir) / "roc_fixture.json") << root.dump(2) << "\n";
    std::ofstream(fs::path(out_dir) / "roc.svg")
        << roc_curve_svg({{"independent", &loaded[0]}, {"ar1_residuals", &loaded[1]}}, "ROC curves (fixtures)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shiryaev-Roberts surveillance of measurement series"};
  app.require_subcommand(1);

  std::string input, config_path, out_dir;
  bool continue_flag = false;
  auto* monitor = app.add_subcommand("monitor", "Monitor every series of a CSV file");
  monitor->add_option("input", input, "Series CSV")->required()->check(CLI::ExistingFile);
  monitor->add_option("-c,--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  monitor->add_option("-o,--out", out_dir, "Output directory")->required();
  monitor->add_flag("--continue-after-alarm", continue_flag, "Keep monitoring after the first alarm");

  auto* calibrate = app.add_subcommand("calibrate", "ROC threshold calibration on a labeled cohort");
  calibrate->add_option("input", input, "Labeled series CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("-c,--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  calibrate->add_option("-o,--out", out_dir, "Output directory")->required();

  std::string sim_out = "-";
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic series from a config file");
  simulate->add_option("config", config_path, "Simulation config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("-o,--out", sim_out, "Output CSV ('-' for stdout)");

  double threshold = 0, delta = 1, window = 60;
  int reps = 2000;
  long horizon = 0;
  std::uint64_t seed = 1;
  bool json = false;
  auto* arl = app.add_subcommand("arl", "Monte Carlo average run length to false alarm");
  arl->add_option("-A,--threshold", threshold, "Alarm threshold")->required();
  arl->add_option("-d,--delta", delta, "Putative shift in SD units")->capture_default_str();
  arl->add_option("-r,--reps", reps, "Replications")->capture_default_str();
  arl->add_option("-s,--seed", seed, "Master seed")->capture_default_str();
  arl->add_option("--horizon", horizon, "Censoring horizon (0: max(100, 10 A))")->capture_default_str();
  arl->add_option("--window", window, "Window for the false-alarm probability")->capture_default_str();
  arl->add_flag("--json", json, "Print JSON");

  std::string fixture_dir = SRWATCH_DEFAULT_FIXTURE_DIR;
  std::vector<double> alphas{0.5, 0.6, 0.7, 0.8, 0.9};
  auto* fixture = app.add_subcommand("roc-fixture", "Threshold selection on the shipped ROC tables");
  fixture->add_option("--fixtures", fixture_dir, "Fixture directory")->capture_default_str();
  fixture->add_option("-a,--alpha", alphas, "Sensitivity weights")->delimiter(',');
  fixture->add_option("-o,--out", out_dir, "Optional output directory for report and plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*monitor) return run_monitor(input, config_path, out_dir, continue_flag);
    if (*calibrate) return run_calibrate(input, config_path, out_dir);
    if (*simulate) return run_simulate(config_path, sim_out);
    if (*arl) return run_arl(threshold, delta, reps, horizon, seed, window, json);
    if (*fixture) return run_roc_fixture(fixture_dir, alphas, out_dir);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.is_numeric() ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
