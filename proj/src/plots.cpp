// Static SVG figures: control chart, ROC curves and g(A, alpha) curves.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "srwatch/pipeline.hpp"

namespace srwatch {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 30;
constexpr double kTop = 40;
constexpr double kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Linear map of [lo, hi] onto a pixel range; log axes map log10 values.
struct Axis {
  double lo = 0;
  double hi = 1;
  double from = 0;
  double to = 1;
  bool log = false;

  double operator()(double v) const {
    const double t = log ? std::log10(v) : v;
    return from + (t - lo) / (hi - lo) * (to - from);
  }
};

class Svg {
 public:
  explicit Svg(std::string_view title) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
             "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kWidth / 2, 22, title, "middle", 15);
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "start", int size = 12,
            std::string_view extra = {}) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + std::string(anchor) +
             "\" font-size=\"" + std::to_string(size) + "\"" + std::string(extra) + ">" + escape(s) + "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke, std::string_view extra = {}) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + std::string(stroke) + "\"" + std::string(extra) + "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke,
                std::string_view extra = {}) {
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1.5\"" +
             std::string(extra) + " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) body_ += ' ';
      body_ += num(pts[i].first) + "," + num(pts[i].second);
    }
    body_ += "\"/>\n";
  }

  void raw(std::string_view s) { body_ += s; }

  void frame(const Axis& x, const Axis& y, std::string_view x_label, std::string_view y_label) {
    body_ += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
             "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
    ticks(x, true);
    ticks(y, false);
    text(kLeft + (kWidth - kLeft - kRight) / 2, kHeight - 12, x_label, "middle");
    text(16, kTop + (kHeight - kTop - kBottom) / 2, y_label, "middle", 12,
         " transform=\"rotate(-90 16 " + num(kTop + (kHeight - kTop - kBottom) / 2) + ")\"");
  }

  void no_data() { text(kWidth / 2, kHeight / 2, "no data", "middle", 18, " class=\"no-data\""); }

  std::string finish() { return body_ + "</svg>\n"; }

 private:
  void ticks(const Axis& axis, bool horizontal) {
    std::vector<double> at;
    if (axis.log) {
      for (double e = std::ceil(axis.lo); e <= axis.hi + 1e-9; e += 1) at.push_back(e);
    } else {
      const double span = axis.hi - axis.lo;
      const double raw_step = span / 5;
      const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
      double step = mag;
      for (const double f : {1.0, 2.0, 5.0, 10.0})
        if (f * mag >= raw_step) {
          step = f * mag;
          break;
        }
      for (double v = std::ceil(axis.lo / step) * step; v <= axis.hi + 1e-9 * span; v += step) at.push_back(v);
    }
    for (const double t : at) {
      const double value = axis.log ? std::pow(10.0, t) : t;
      const double p = axis(value);
      const std::string label = axis.log ? "1e" + label_number(t) : label_number(std::abs(t) < 1e-12 ? 0 : t);
      if (horizontal) {
        line(p, kHeight - kBottom, p, kHeight - kBottom + 5, "black");
        text(p, kHeight - kBottom + 18, label, "middle", 11);
      } else {
        line(kLeft - 5, p, kLeft, p, "black");
        text(kLeft - 8, p + 4, label, "end", 11);
      }
    }
  }

  std::string body_;
};

Axis x_axis(double lo, double hi, bool log) { return {lo, hi, kLeft, kWidth - kRight, log}; }
Axis y_axis(double lo, double hi, bool log) { return {lo, hi, kHeight - kBottom, kTop, log}; }

}  // namespace

std::string control_chart_svg(const MonitoringReport& report, int learning_period) {
  Svg svg("Control chart " + report.series_id + " (" + std::string(to_string(report.branch)) + ")");
  if (report.chart.empty()) {
    svg.no_data();
    return svg.finish();
  }
  double r_min = 1;
  double r_max = std::max(report.threshold, 1.0);
  for (const auto& p : report.chart) {
    r_min = std::min(r_min, p.statistic);
    r_max = std::max(r_max, p.statistic);
  }
  const Axis x = x_axis(0, static_cast<double>(report.chart.back().observation) + 1, false);
  const Axis y = y_axis(std::floor(std::log10(r_min)), std::ceil(std::log10(r_max) + 0.3), true);
  svg.frame(x, y, "observation", "R_n (log scale)");

  std::vector<std::pair<double, double>> pts;
  for (const auto& p : report.chart) pts.emplace_back(x(static_cast<double>(p.observation)), y(p.statistic));
  svg.polyline(pts, kPalette[0], " class=\"statistic\"");
  if (report.threshold > 0) {
    svg.line(kLeft, y(report.threshold), kWidth - kRight, y(report.threshold), kPalette[1],
             " stroke-dasharray=\"6 4\" class=\"threshold\"");
    svg.text(kWidth - kRight - 4, y(report.threshold) - 5, "A = " + label_number(report.threshold), "end", 11);
  }
  svg.line(x(learning_period), kTop, x(learning_period), kHeight - kBottom, "#888888",
           " stroke-dasharray=\"2 3\" class=\"learning-end\"");
  if (report.alarm_observation) {
    const auto& p = report.chart[static_cast<std::size_t>(*report.alarm_index - 1)];
    svg.raw("<circle class=\"alarm\" cx=\"" + num(x(static_cast<double>(p.observation))) + "\" cy=\"" +
            num(y(p.statistic)) + "\" r=\"5\" fill=\"" + kPalette[1] + "\" data-observation=\"" +
            std::to_string(p.observation) + "\"/>\n");
  }
  return svg.finish();
}

std::string roc_curve_svg(const std::vector<std::pair<std::string, const RocTable*>>& curves,
                          std::string_view title) {
  Svg svg(title);
  const Axis x = x_axis(0, 1, false);
  const Axis y = y_axis(0, 1, false);
  svg.frame(x, y, "1 - specificity", "sensitivity");
  if (curves.empty()) {
    svg.no_data();
    return svg.finish();
  }
  svg.line(x(0), y(0), x(1), y(1), "#aaaaaa", " stroke-dasharray=\"4 4\"");
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const RocTable& roc = *curves[c].second;
    const char* color = kPalette[c % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : roc.rows) pts.emplace_back(x(row.false_positive_rate), y(row.sensitivity));
    std::sort(pts.begin(), pts.end());
    svg.polyline(pts, color, " class=\"roc\"");
    const double ly = kTop + 20 + 18 * static_cast<double>(c);
    svg.line(x(0.55), ly - 4, x(0.6), ly - 4, color);
    char auc[32];
    std::snprintf(auc, sizeof auc, "%.3f", roc.auc.auc);
    svg.text(x(0.62), ly, curves[c].first + " (AUC " + auc + ")");
  }
  return svg.finish();
}

std::string g_curve_svg(const RocTable& roc, const std::vector<AlphaSelection>& selections, std::string_view title) {
  Svg svg(title);
  if (roc.rows.empty() || selections.empty()) {
    svg.no_data();
    return svg.finish();
  }
  const bool log = roc.rows.front().cutoff > 0;
  const double lo = log ? std::log10(roc.rows.front().cutoff) : roc.rows.front().cutoff;
  const double hi = log ? std::log10(roc.rows.back().cutoff) : roc.rows.back().cutoff;
  const Axis x = x_axis(log ? std::floor(lo) : lo, log ? std::ceil(hi) : hi, log);
  const Axis y = y_axis(0, 1, false);
  svg.frame(x, y, log ? "threshold A (log scale)" : "threshold A", "g(A, alpha)");

  for (std::size_t s = 0; s < selections.size(); ++s) {
    const double alpha = selections[s].alpha;
    const char* color = kPalette[s % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : roc.rows) {
      const double g = alpha * row.sensitivity + (1 - alpha) * row.specificity();
      pts.emplace_back(x(row.cutoff), y(g));
    }
    svg.polyline(pts, color, " class=\"g-curve\" data-alpha=\"" + label_number(alpha) + "\"");
    const double ly = kTop + 16 + 16 * static_cast<double>(s);
    svg.line(kWidth - kRight - 150, ly - 4, kWidth - kRight - 130, ly - 4, color);
    std::string legend = "alpha = " + label_number(alpha);
    if (const auto& c = selections[s].choice) {
      svg.raw("<circle class=\"argmax\" cx=\"" + num(x(c->threshold)) + "\" cy=\"" + num(y(c->score)) +
              "\" r=\"5\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" data-alpha=\"" +
              label_number(alpha) + "\" data-threshold=\"" + label_number(c->threshold) + "\"/>\n");
      legend += ", A = " + label_number(c->threshold);
    } else {
      legend += ", none admissible";
    }
    svg.text(kWidth - kRight - 125, ly, legend, "start", 11);
  }
  return svg.finish();
}

}  // namespace srwatch
