#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "srwatch/error.hpp"
#include "srwatch/pipeline.hpp"

namespace srwatch {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  for (;;) {
    const auto comma = line.find(',');
    fields.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) return fields;
    line = line.substr(comma + 1);
  }
}

std::string where(std::string_view source, int line) { return std::string(source) + ":" + std::to_string(line); }

double number(std::string_view text, std::string_view source, int line, std::string_view column) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(ErrorCode::Parse, where(source, line) + ": cannot parse " + std::string(column) + " '" +
                                      std::string(text) + "'");
  if (!std::isfinite(v))
    throw Error(ErrorCode::Validation, where(source, line) + ": " + std::string(column) + " is not finite");
  return v;
}

void put_number(std::ostream& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

std::vector<MeasurementSeries> ingest_csv(std::istream& in, std::string_view source) {
  std::string raw;
  int line = 0;
  if (!std::getline(in, raw)) throw Error(ErrorCode::Parse, std::string(source) + ": empty file, header expected");
  ++line;
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();
  if (raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) raw.erase(0, 3);
  const auto header = split(raw);
  const bool has_label = header.size() == 4;
  if (!((header.size() == 3 || has_label) && header[0] == "series_id" && header[1] == "timestamp_hours" &&
        header[2] == "value" && (!has_label || header[3] == "label")))
    throw Error(ErrorCode::Parse, where(source, line) + ": header must be series_id,timestamp_hours,value[,label]");

  std::vector<MeasurementSeries> series;
  std::map<std::string, std::size_t, std::less<>> position;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    const auto fields = split(raw);
    if (fields.size() != header.size())
      throw Error(ErrorCode::Parse, where(source, line) + ": expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(fields.size()));
    if (fields[0].empty()) throw Error(ErrorCode::Parse, where(source, line) + ": empty series_id");
    const double t = number(fields[1], source, line, "timestamp_hours");
    const double x = number(fields[2], source, line, "value");
    std::optional<Outcome> label;
    if (has_label && !fields[3].empty()) {
      label = parse_outcome(fields[3]);
      if (!label)
        throw Error(ErrorCode::Parse, where(source, line) + ": label must be survived or died, got '" +
                                          std::string(fields[3]) + "'");
    }

    auto it = position.find(fields[0]);
    if (it == position.end()) {
      it = position.emplace(std::string(fields[0]), series.size()).first;
      MeasurementSeries fresh;
      fresh.series_id = std::string(fields[0]);
      fresh.label = label;
      series.push_back(std::move(fresh));
    }
    MeasurementSeries& s = series[it->second];
    if (s.label != label)
      throw Error(ErrorCode::Validation,
                  where(source, line) + ": series '" + s.series_id + "' has inconsistent labels");
    if (!s.timestamps.empty() && !(t > s.timestamps.back()))
      throw Error(ErrorCode::Validation, where(source, line) + ": series '" + s.series_id +
                                             "' timestamps must strictly increase (" +
                                             (t == s.timestamps.back() ? "duplicate" : "out of order") + ")");
    s.timestamps.push_back(t);
    s.values.push_back(x);
  }
  return series;
}

std::vector<MeasurementSeries> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return ingest_csv(in, path.string());
}

void emit_csv(std::ostream& out, const std::vector<MeasurementSeries>& series) {
  out << "series_id,timestamp_hours,value,label\n";
  for (const auto& s : series) {
    s.validate();
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.series_id << ',';
      put_number(out, s.timestamps[i]);
      out << ',';
      put_number(out, s.values[i]);
      out << ',';
      if (s.label) out << to_string(*s.label);
      out << '\n';
    }
  }
}

void emit_csv(const std::filesystem::path& path, const std::vector<MeasurementSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  emit_csv(out, series);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace srwatch
