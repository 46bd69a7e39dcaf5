#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "srwatch/error.hpp"
#include "srwatch/pipeline.hpp"

namespace srwatch {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

/// File-name-safe stems, unique within one report.
std::vector<std::string> file_stems(const std::vector<const MonitoringReport*>& reports) {
  std::vector<std::string> stems;
  std::map<std::string, int> seen;
  for (const auto* r : reports) {
    std::string stem;
    for (const char c : r->series_id)
      stem += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    if (stem.empty() || stem[0] == '.') stem.insert(0, "s");
    const int n = seen[stem]++;
    if (n > 0) stem += "-" + std::to_string(n + 1);
    stems.push_back(stem);
  }
  return stems;
}

Json config_json(const MonitorConfig& c) {
  return Json{{"m", c.m},
              {"delta", c.delta},
              {"threshold_independent", c.threshold_independent},
              {"threshold_dependent", c.threshold_dependent},
              {"significance_level", c.significance_level},
              {"alpha_weights", c.alpha_weights},
              {"continue_after_alarm", c.continue_after_alarm},
              {"ljung_box_lags", c.ljung_box_lags}};
}

std::string config_text(const MonitorConfig& c) {
  std::string alphas;
  for (const double a : c.alpha_weights) alphas += (alphas.empty() ? "" : ",") + shortest(a);
  return "config: m=" + std::to_string(c.m) + " delta=" + shortest(c.delta) +
         " threshold_independent=" + shortest(c.threshold_independent) +
         " threshold_dependent=" + shortest(c.threshold_dependent) +
         " significance_level=" + shortest(c.significance_level) + " alpha_weights=" + alphas +
         " continue_after_alarm=" + (c.continue_after_alarm ? "true" : "false") + "\n";
}

Json diagnostic_json(const DiagnosticResult& d) {
  return Json{{"test", std::string(to_string(d.test))},
              {"statistic", number_or_null(d.statistic)},
              {"p_value", number_or_null(d.p_value)},
              {"level", d.level},
              {"pass", d.pass}};
}

Json series_json(const MonitoringReport& r, const std::string& stem) {
  Json j;
  j["series_id"] = r.series_id;
  j["label"] = r.label ? Json(std::string(to_string(*r.label))) : Json(nullptr);
  j["length"] = r.length;
  j["branch"] = std::string(to_string(r.branch));
  j["threshold"] = r.threshold > 0 ? Json(r.threshold) : Json(nullptr);
  if (r.model) {
    j["model"] = Json{{"p", r.model->p},
                      {"q", r.model->q},
                      {"a0", r.model->a0},
                      {"a", std::vector<double>(r.model->a.data(), r.model->a.data() + r.model->a.size())},
                      {"b", std::vector<double>(r.model->b.data(), r.model->b.data() + r.model->b.size())},
                      {"sigma2", r.model->sigma2},
                      {"aic", r.model->aic},
                      {"nonstationary", r.model->nonstationary}};
  } else {
    j["model"] = nullptr;
  }
  j["alarm_index"] = optional_json(r.alarm_index);
  j["alarm_observation"] = optional_json(r.alarm_observation);
  j["alarm_indices"] = r.alarm_indices;
  j["stopped_at_alarm"] = r.stopped_at_alarm;
  j["dropped"] = r.dropped;
  j["max_statistic"] = optional_json(r.max_statistic());
  j["chart_points"] = r.chart.size();
  j["chart_file"] = r.chart.empty() ? Json(nullptr) : Json("charts/" + stem + ".csv");
  Json diags = Json::array();
  for (const auto& d : r.diagnostics) diags.push_back(diagnostic_json(d));
  j["diagnostics"] = diags;
  if (r.interval_effect)
    j["interval_effect"] = Json{{"c1", r.interval_effect->c1},
                                {"std_error", r.interval_effect->std_error},
                                {"p_value", r.interval_effect->diagnostic.p_value},
                                {"pass", r.interval_effect->diagnostic.pass}};
  else
    j["interval_effect"] = nullptr;
  j["warnings"] = r.warnings;
  j["status"] = r.status;
  return j;
}

void series_text(std::ostream& out, const MonitoringReport& r) {
  out << "\n[series " << r.series_id << "]\n";
  out << "  label: " << (r.label ? std::string(to_string(*r.label)) : "-") << "\n";
  out << "  length: " << r.length << "\n";
  out << "  branch: " << to_string(r.branch) << "\n";
  if (r.threshold > 0) out << "  threshold: " << g6(r.threshold) << "\n";
  if (r.model)
    out << "  model: AR(1) a0=" << g6(r.model->a0) << " a1=" << g6(r.model->a(0)) << " sigma2=" << g6(r.model->sigma2)
        << "\n";
  for (const auto& d : r.diagnostics)
    out << "  diagnostic: " << to_string(d.test) << " statistic=" << g6(d.statistic) << " p=" << g6(d.p_value)
        << (d.pass ? " pass" : " fail") << "\n";
  if (const auto mx = r.max_statistic()) out << "  max R: " << g6(*mx) << "\n";
  if (r.alarm_observation)
    out << "  alarm: observation " << *r.alarm_observation << " (chart index " << *r.alarm_index << ")\n";
  else
    out << "  alarm: none\n";
  if (r.dropped > 0) out << "  dropped: " << r.dropped << "\n";
  for (const auto& w : r.warnings) out << "  warning: " << w << "\n";
  out << "  status: " << r.status << "\n";
}

std::string chart_csv(const MonitoringReport& r) {
  std::string s = "index,observation,statistic\n";
  for (const auto& p : r.chart)
    s += std::to_string(p.index) + "," + std::to_string(p.observation) + "," + shortest(p.statistic) + "\n";
  return s;
}

std::vector<const MonitoringReport*> by_id(const std::vector<MonitoringReport>& reports) {
  std::vector<const MonitoringReport*> ordered;
  for (const auto& r : reports) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->series_id < b->series_id; });
  return ordered;
}

Json auc_json(const RocTable& roc) {
  return Json{{"auc", roc.auc.auc},
              {"se", roc.auc.se},
              {"p_value", roc.auc.p_value},
              {"ci_lower", roc.auc.ci_lower},
              {"ci_upper", roc.auc.ci_upper}};
}

Json selections_json(const std::vector<AlphaSelection>& selections) {
  Json out = Json::array();
  for (const auto& s : selections) {
    Json j{{"alpha", s.alpha}};
    if (s.choice) {
      j["threshold"] = s.choice->threshold;
      j["sensitivity"] = s.choice->sensitivity;
      j["specificity"] = s.choice->specificity;
      j["g"] = s.choice->score;
      j["error"] = nullptr;
    } else {
      j["threshold"] = nullptr;
      j["error"] = s.error;
    }
    out.push_back(j);
  }
  return out;
}

}  // namespace

void write_roc_table(std::ostream& out, const RocTable& roc) {
  out << "# n_died " << roc.n_died << "\n# n_survived " << roc.n_survived << "\n";
  out << "# auc " << shortest(roc.auc.auc) << "\n# auc_se " << shortest(roc.auc.se) << "\n";
  out << "# auc_p " << shortest(roc.auc.p_value) << "\n";
  out << "# ci_lower " << shortest(roc.auc.ci_lower) << "\n# ci_upper " << shortest(roc.auc.ci_upper) << "\n";
  out << "# columns: cutoff (positive if >=)\tsensitivity\t1 - specificity\n";
  for (const auto& row : roc.rows)
    out << shortest(row.cutoff) << '\t' << shortest(row.sensitivity) << '\t' << shortest(row.false_positive_rate)
        << '\n';
}

void emit_report(const std::vector<MonitoringReport>& reports, const MonitorConfig& config, const fs::path& out_dir) {
  make_dirs(out_dir);
  const auto ordered = by_id(reports);
  const auto stems = file_stems(ordered);

  Json root;
  root["schema"] = "srwatch.monitor/1";
  root["config"] = config_json(config);
  root["series_count"] = ordered.size();
  root["no_data"] = ordered.empty();
  Json series = Json::array();
  std::ostringstream text;
  text << "srwatch monitoring report\n" << config_text(config) << "series: " << ordered.size() << "\n";
  if (ordered.empty()) text << "no data: the input contained no series\n";

  std::map<std::string, long> per_branch;
  for (const auto* r : ordered) per_branch[std::string(to_string(r->branch))] += 1;
  for (const auto& [branch, count] : per_branch) text << "branch " << branch << ": " << count << "\n";

  if (!ordered.empty()) {
    make_dirs(out_dir / "charts");
    make_dirs(out_dir / "plots");
  }
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& r = *ordered[i];
    series.push_back(series_json(r, stems[i]));
    series_text(text, r);
    if (!r.chart.empty()) write_file(out_dir / "charts" / (stems[i] + ".csv"), chart_csv(r));
    write_file(out_dir / "plots" / (stems[i] + ".svg"), control_chart_svg(r, config.m));
  }
  root["series"] = series;
  write_file(out_dir / "report.json", root.dump(2) + "\n");
  write_file(out_dir / "report.txt", text.str());
}

void emit_report(const CalibrationReport& report, const MonitorConfig& config, const fs::path& out_dir) {
  make_dirs(out_dir);
  const auto ordered = by_id(report.series);

  Json root;
  root["schema"] = "srwatch.calibration/1";
  root["config"] = config_json(config);
  root["series_count"] = ordered.size();
  root["no_data"] = ordered.empty();
  std::ostringstream text;
  text << "srwatch calibration report\n" << config_text(config) << "series: " << ordered.size() << "\n";
  if (ordered.empty()) text << "no data: the cohort contained no series\n";

  std::string scores = "series_id,label,branch,max_statistic\n";
  Json series = Json::array();
  for (const auto* r : ordered) {
    const auto mx = r->max_statistic();
    scores += r->series_id + "," + (r->label ? std::string(to_string(*r->label)) : "") + "," +
              std::string(to_string(r->branch)) + "," + (mx ? shortest(*mx) : "") + "\n";
    series.push_back(Json{{"series_id", r->series_id},
                          {"label", r->label ? Json(std::string(to_string(*r->label))) : Json(nullptr)},
                          {"branch", std::string(to_string(r->branch))},
                          {"max_statistic", optional_json(mx)},
                          {"status", r->status}});
  }
  root["series"] = series;

  Json branches = Json::array();
  std::vector<std::pair<std::string, const RocTable*>> curves;
  for (const auto& b : report.branches) {
    const std::string name(to_string(b.branch));
    Json j{{"branch", name}, {"series", b.series_ids.size()}};
    text << "\n[branch " << name << "]\n  series: " << b.series_ids.size() << "\n";
    if (!b.roc) {
      j["error"] = b.error;
      text << "  error: " << b.error << "\n";
      branches.push_back(j);
      continue;
    }
    const RocTable& roc = *b.roc;
    j["error"] = nullptr;
    j["n_died"] = roc.n_died;
    j["n_survived"] = roc.n_survived;
    j["auc"] = auc_json(roc);
    j["selections"] = selections_json(b.selections);
    j["roc_file"] = "roc_" + name + ".tsv";
    branches.push_back(j);

    text << "  died: " << roc.n_died << "  survived: " << roc.n_survived << "\n";
    text << "  AUC: " << g6(roc.auc.auc) << "  SE: " << g6(roc.auc.se) << "  p: " << g6(roc.auc.p_value)
         << "  95% CI: [" << g6(roc.auc.ci_lower) << ", " << g6(roc.auc.ci_upper) << "]\n";
    for (const auto& s : b.selections) {
      text << "  alpha " << shortest(s.alpha) << ": ";
      if (s.choice)
        text << "A=" << g6(s.choice->threshold) << " sensitivity=" << g6(s.choice->sensitivity)
             << " specificity=" << g6(s.choice->specificity) << " g=" << g6(s.choice->score) << "\n";
      else
        text << s.error << "\n";
    }

    std::ostringstream tsv;
    write_roc_table(tsv, roc);
    write_file(out_dir / ("roc_" + name + ".tsv"), tsv.str());
    write_file(out_dir / ("g_" + name + ".svg"), g_curve_svg(roc, b.selections, "g(A, alpha), " + name));
    curves.emplace_back(name, &roc);
  }
  root["branches"] = branches;
  root["warnings"] = report.warnings;
  if (!report.warnings.empty()) text << "\n";
  for (const auto& w : report.warnings) text << "warning: " << w << "\n";

  write_file(out_dir / "roc.svg", roc_curve_svg(curves, "ROC curves"));
  write_file(out_dir / "scores.csv", scores);
  write_file(out_dir / "calibration.json", root.dump(2) + "\n");
  write_file(out_dir / "calibration.txt", text.str());
}

}  // namespace srwatch
